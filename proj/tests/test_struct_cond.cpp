// Copyright 2026 The ssi Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "ssi/pipeline.hpp"
#include "test_support.hpp"

namespace ssi {
namespace {

using testing::seeded_models;

Image flat(float v) {
  Image img(3, kImageSize, kImageSize);
  img.data.setConstant(v);
  return img;
}

// Left half black, right half white.
Image vertical_edge() {
  Image img(3, kImageSize, kImageSize);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < kImageSize; ++y)
      for (int x = kImageSize / 2; x < kImageSize; ++x) img.at(c, y, x) = 1.0f;
  return img;
}

TEST(Structure, EdgeMapOfFlatImageIsZero) {
  const auto m = extract_structure(flat(0.3f), StructureKind::edge);
  EXPECT_EQ(m.map.channels(), 1);
  EXPECT_EQ(m.map.height, kLatentSize);
  EXPECT_EQ(m.map.data.cwiseAbs().maxCoeff(), 0.0f);
}

TEST(Structure, EdgeMapPeaksAtTheStep) {
  const auto m = extract_structure(vertical_edge(), StructureKind::edge);
  EXPECT_FLOAT_EQ(m.map.data.maxCoeff(), 1.0f);
  // Sobel response at x = 31, 32 (full res) pools into latent columns 15 and 16.
  for (int y = 0; y < kLatentSize; ++y) {
    EXPECT_GT(m.map.at(0, y, 15) + m.map.at(0, y, 16), 0.5f);
    EXPECT_EQ(m.map.at(0, y, 4), 0.0f);
    EXPECT_EQ(m.map.at(0, y, 28), 0.0f);
  }
}

TEST(Structure, SobelMatchesHandComputedKernel) {
  Matrix lum = Matrix::Zero(5, 5);
  lum.col(3).setConstant(1.0f);
  lum.col(4).setConstant(1.0f);
  const Matrix g = detail::sobel_magnitude(lum);
  EXPECT_FLOAT_EQ(g(2, 2), 4.0f);  // gx = (1 + 2 + 1) - 0
  EXPECT_FLOAT_EQ(g(2, 1), 0.0f);
  EXPECT_FLOAT_EQ(g(2, 3), 4.0f);
}

TEST(Structure, DepthProxyIsSmoothLuminanceInUnitRange) {
  const auto m = extract_structure(vertical_edge(), StructureKind::depth);
  EXPECT_GE(m.map.data.minCoeff(), 0.0f);
  EXPECT_LE(m.map.data.maxCoeff(), 1.0f);
  EXPECT_NEAR(m.map.at(0, 10, 0), 0.0f, 1e-6f);
  EXPECT_NEAR(m.map.at(0, 10, 31), 1.0f, 1e-6f);
  EXPECT_GT(m.map.at(0, 10, 16), 0.3f);  // blurred transition
  EXPECT_LT(m.map.at(0, 10, 15), 0.7f);
}

TEST(Structure, GaussianBlurPreservesConstants) {
  const Matrix c = Matrix::Constant(9, 9, 0.42f);
  EXPECT_LT((detail::gaussian_blur(c, 2.0) - c).cwiseAbs().maxCoeff(), 1e-6f);
}

TEST(Structure, RejectsWrongImageShape) {
  EXPECT_THROW(extract_structure(Image(3, 32, 32), StructureKind::edge), ShapeError);
  EXPECT_THROW(parse_structure_kind("normal"), ParameterError);
  EXPECT_EQ(parse_structure_kind(to_string(StructureKind::edge)), StructureKind::edge);
}

TEST(Residual, ShapesMatchDecoderLayers) {
  const auto m = extract_structure(benchmark_content(42, 0), StructureKind::depth);
  for (int l = kFirstDecoderLayer; l <= kLastDecoderLayer; ++l) {
    const FeatureMap r = conditioning_residual(m, l, seeded_models().cond);
    const auto shape = DenoiserShape::layer(l);
    EXPECT_EQ(r.channels(), shape.channels);
    EXPECT_EQ(r.height, shape.height);
    EXPECT_EQ(r.width, shape.width);
  }
  EXPECT_THROW(conditioning_residual(m, 12, seeded_models().cond), ParameterError);
}

TEST(Residual, ZeroMapGivesZeroResidual) {
  // The encoder is bias-free.
  StructureMap m{FeatureMap(1, kLatentSize, kLatentSize), StructureKind::depth};
  EXPECT_EQ(conditioning_residual(m, 9, seeded_models().cond).data.cwiseAbs().maxCoeff(), 0.0f);
}

TEST(Residual, ScalingIsLinear) {
  const auto m = extract_structure(benchmark_content(42, 1), StructureKind::edge);
  const FeatureMap r = conditioning_residual(m, 7, seeded_models().cond);
  EXPECT_EQ(scaled_residual(r, 0.0).data.cwiseAbs().maxCoeff(), 0.0f);
  EXPECT_LT((scaled_residual(r, 0.5).data * 2.0f - r.data).cwiseAbs().maxCoeff(), 1e-6f);
}

TEST(CondConfig, ValidatesWithKeyNames) {
  CondConfig c;
  c.enabled = true;
  EXPECT_NO_THROW(c.validate());
  c.scale_base = -0.1;
  EXPECT_THROW(c.validate(), ConfigError);
  c.scale_base = 1.5;
  EXPECT_NO_THROW(c.validate());  // fixed scales may exceed 1
  c.scale_axis = ControlAxis::timestep;
  try {
    c.validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "cn_scale");
  }
  c = {};
  c.active_layers = {4};
  EXPECT_THROW(c.validate(), ConfigError);
}

class CondPipeline : public ::testing::Test {
 protected:
  static constexpr int kSteps = 6;
  Image content = benchmark_content(42, 2);
  Image style = benchmark_style(42, 2);
  NoiseSchedule ns = make_noise_schedule(kSteps);
  InvertedImage ci = invert_image(content, seeded_models(), ns, FeatureSource::inversion);
  InvertedImage si = invert_image(style, seeded_models(), ns, FeatureSource::inversion);

  StylizeSettings settings(bool enabled, double scale) const {
    StylizeSettings st;
    st.steps = kSteps;
    st.cond.enabled = enabled;
    st.cond.scale_base = scale;
    return st;
  }
};

TEST_F(CondPipeline, ZeroScaleEqualsDisabled) {
  const Image off = stylize_inverted(ci, si, content, settings(false, 0.25), seeded_models()).image;
  const Image zero = stylize_inverted(ci, si, content, settings(true, 0.0), seeded_models()).image;
  EXPECT_TRUE(off.bit_equal(zero));
}

TEST_F(CondPipeline, PositiveScaleChangesOutput) {
  const Image off = stylize_inverted(ci, si, content, settings(false, 0.25), seeded_models()).image;
  const Image on = stylize_inverted(ci, si, content, settings(true, 1.0), seeded_models()).image;
  EXPECT_GT((on.data - off.data).cwiseAbs().mean(), 1e-5f);
}

TEST_F(CondPipeline, InactiveLayersReceiveNothing) {
  StylizeSettings st = settings(true, 0.5);
  st.cond.active_layers = {};
  const Image none = stylize_inverted(ci, si, content, st, seeded_models()).image;
  const Image off = stylize_inverted(ci, si, content, settings(false, 0.5), seeded_models()).image;
  EXPECT_TRUE(none.bit_equal(off));
}

TEST_F(CondPipeline, LogsScheduledScales) {
  StylizeSettings st = settings(true, 0.5);
  st.cond.scale_axis = ControlAxis::layer;
  st.cond.active_layers = {6, 11};
  InstrumentationLog log;
  stylize_inverted(ci, si, content, st, seeded_models(), &log);
  ASSERT_EQ(log.cn_scale.size(), static_cast<std::size_t>(2 * kSteps));
  for (const auto& row : log.cn_scale) EXPECT_DOUBLE_EQ(row.value, row.layer == 6 ? 0.5 : 0.25);
}

}  // namespace
}  // namespace ssi
