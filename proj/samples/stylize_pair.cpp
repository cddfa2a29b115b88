// Copyright 2026 The ssi Authors
// SPDX-License-Identifier: Apache-2.0

// Stylizes one procedural content image with one procedural style image and
// prints the proxy metrics at three gamma values.

#include <cstdio>

#include "ssi/experiment.hpp"

int main() {
  const std::uint64_t seed = 42;
  ssi::ModelConfig mc;
  mc.weights_path = "ssi_weights.bin";  // reused on later runs
  const ssi::Models models = ssi::make_models(seed, mc);

  const ssi::Image content = ssi::benchmark_content(seed, 0);
  const ssi::Image style = ssi::benchmark_style(seed, 0);
  ssi::save_ppm("content.ppm", content);
  ssi::save_ppm("style.ppm", style);

  for (double gamma : {0.0, 0.75, 1.0}) {
    ssi::StylizeSettings st;
    st.injection.gamma_base = gamma;
    const ssi::Image out = ssi::stylize(content, style, st, models).image;
    const double s = ssi::style_distance({out}, {style}, models.extractor);
    const double c = ssi::content_distance(out, content, models.extractor);
    std::printf("gamma %.2f  S %.4f  C %.4f  combined %.4f\n", gamma, s, c, ssi::combined_metric(s, c));
    char name[32];
    std::snprintf(name, sizeof name, "stylized_g%03d.ppm", static_cast<int>(gamma * 100));
    ssi::save_ppm(name, out);
  }
}
