// Copyright 2026 The ssi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>

#include "ssi/error.hpp"
#include "ssi/tensor.hpp"

namespace ssi {

// Attention operands are token-major: one row per token, one column per
// feature dimension.

/// Query after query preservation; same shape as the content query.
struct BlendedQuery {
  Matrix q;
};

/// gamma * q_content + (1 - gamma) * q_stylized. The endpoints return the
/// corresponding source bit-exactly.
inline BlendedQuery blend_query(const Matrix& q_content, const Matrix& q_stylized, double gamma) {
  if (q_content.rows() != q_stylized.rows() || q_content.cols() != q_stylized.cols())
    throw ShapeError("blend_query: query shapes differ");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw DomainError("blend_query: gamma must lie in [0,1], got " + std::to_string(gamma));
  if (gamma == 1.0) return {q_content};
  if (gamma == 0.0) return {q_stylized};
  const float g = static_cast<float>(gamma);
  return {g * q_content + (1.0f - g) * q_stylized};
}

/// Row-stochastic attention map softmax(tau * q k^T / sqrt(d)).
///
/// The temperature multiplies the logits after the 1/sqrt(d) factor.
inline Matrix attention_weights(const Matrix& q, const Matrix& k, double tau) {
  if (q.cols() != k.cols())
    throw ShapeError("attention: query dim " + std::to_string(q.cols()) + " != key dim " +
                     std::to_string(k.cols()));
  if (k.rows() == 0) throw ShapeError("attention: no keys");
  if (!(tau > 0.0)) throw DomainError("attention: tau must be positive");
  const float scale = 1.0f / std::sqrt(static_cast<float>(q.cols()));
  Matrix logits = (q * k.transpose()) * scale;
  if (tau != 1.0) logits *= static_cast<float>(tau);
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    row.array() = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
  }
  return logits;
}

/// Attn(q, k, v) with temperature: softmax(tau * q k^T / sqrt(d)) v.
inline Matrix injected_attention(const Matrix& q, const Matrix& k, const Matrix& v, double tau) {
  if (k.rows() != v.rows())
    throw ShapeError("attention: " + std::to_string(k.rows()) + " keys but " + std::to_string(v.rows()) +
                     " values");
  return attention_weights(q, k, tau) * v;
}

inline Matrix injected_attention(const BlendedQuery& q, const Matrix& k, const Matrix& v, double tau) {
  return injected_attention(q.q, k, v, tau);
}

}  // namespace ssi
