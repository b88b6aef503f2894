// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

// Straight-line reference implementations used as test oracles. Everything
// here is written with explicit loops over std::vector and never calls the
// library's differentiable ops, so agreement is evidence rather than
// tautology.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vfib/model.hpp"
#include "vfib/rng.hpp"
#include "vfib/tensor.hpp"

namespace vfib::oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline Mat to_mat(const Tensor& t) {
  const std::size_t r = t.shape().at(0);
  const std::size_t c = t.rank() == 1 ? 1 : t.shape().at(1);
  Mat m(r, Vec(c));
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) m[i][j] = t.data()[i * c + j];
  }
  return m;
}

inline Vec to_vec(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

inline Mat matmul(const Mat& a, const Mat& b) {
  const std::size_t p = a.size();
  const std::size_t q = b.size();
  const std::size_t r = b.empty() ? 0 : b[0].size();
  Mat out(p, Vec(r, 0.0));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < r; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < q; ++k) s += a[i][k] * b[k][j];
      out[i][j] = s;
    }
  }
  return out;
}

inline Vec matvec(const Mat& a, const Vec& x) {
  Vec out(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = 0; k < x.size(); ++k) out[i] += a[i][k] * x[k];
  }
  return out;
}

inline Mat transpose(const Mat& a) {
  Mat out(a.empty() ? 0 : a[0].size(), Vec(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[i].size(); ++j) out[j][i] = a[i][j];
  }
  return out;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Vec softmax(const Vec& v) {
  Vec out(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) total += std::exp(v[i]);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::exp(v[i]) / total;
  return out;
}

inline double cross_entropy(const Vec& logits, std::size_t gold) {
  return -std::log(softmax(logits)[gold]);
}

inline std::size_t argmax(const Vec& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

inline Vec column(const Tensor& table, std::size_t j) {
  const std::size_t rows = table.shape()[0];
  const std::size_t cols = table.shape()[1];
  Vec out(rows);
  for (std::size_t i = 0; i < rows; ++i) out[i] = table.data()[i * cols + j];
  return out;
}

/// Every hidden state of an LSTM stepped over `xs` from zero state, one
/// gate at a time.
inline std::vector<Vec> lstm_states(const std::vector<Vec>& xs,
                                    const ModelParams& params,
                                    const std::string& prefix) {
  const Mat Wi = to_mat(params.at(prefix + ".W_i"));
  const Mat Wf = to_mat(params.at(prefix + ".W_f"));
  const Mat Wo = to_mat(params.at(prefix + ".W_o"));
  const Mat Wc = to_mat(params.at(prefix + ".W_c"));
  const Vec bi = to_vec(params.at(prefix + ".b_i"));
  const Vec bf = to_vec(params.at(prefix + ".b_f"));
  const Vec bo = to_vec(params.at(prefix + ".b_o"));
  const Vec bc = to_vec(params.at(prefix + ".b_c"));
  const std::size_t hidden = bi.size();
  Vec h(hidden, 0.0);
  Vec c(hidden, 0.0);
  std::vector<Vec> out;
  for (const Vec& x : xs) {
    Vec xh = x;
    xh.insert(xh.end(), h.begin(), h.end());
    Vec h_next(hidden);
    Vec c_next(hidden);
    for (std::size_t r = 0; r < hidden; ++r) {
      double si = bi[r], sf = bf[r], so = bo[r], sc = bc[r];
      for (std::size_t k = 0; k < xh.size(); ++k) {
        si += Wi[r][k] * xh[k];
        sf += Wf[r][k] * xh[k];
        so += Wo[r][k] * xh[k];
        sc += Wc[r][k] * xh[k];
      }
      const double in = sigmoid(si);
      const double forget = sigmoid(sf);
      const double output = sigmoid(so);
      const double cand = std::tanh(sc);
      c_next[r] = forget * c[r] + in * cand;
      h_next[r] = output * std::tanh(c_next[r]);
    }
    h = h_next;
    c = c_next;
    out.push_back(h);
  }
  return out;
}

inline Vec lstm_last(const std::vector<Vec>& xs, const ModelParams& params,
                     const std::string& prefix, std::size_t hidden) {
  const auto states = lstm_states(xs, params, prefix);
  return states.empty() ? Vec(hidden, 0.0) : states.back();
}

inline std::vector<Vec> embed(const Tensor& table,
                              const std::vector<std::size_t>& ids) {
  std::vector<Vec> out;
  for (std::size_t id : ids) out.push_back(column(table, id));
  return out;
}

inline Vec tanh_vec(Vec v) {
  for (double& x : v) x = std::tanh(x);
  return v;
}

struct EncoderTrace {
  Vec u1_l, u1_r, mu_l, mu_r, u2_l, u2_r, u_q;
  std::size_t q1_l = 0, q1_r = 0, q2_l = 0, q2_r = 0;
};

/// The two-stage encoder composed from the loop primitives above.
inline EncoderTrace encoder(const ModelParams& p, const FragmentPair& pair) {
  EncoderTrace t;
  const std::size_t h = p.at("lstm1_lr.b_i").size();
  const auto q1_l = embed(p.at("W1_x"), pair.left);
  const auto q1_r = embed(p.at("W1_x"), pair.right);
  t.q1_l = q1_l.size();
  t.q1_r = q1_r.size();
  t.u1_l = lstm_last(q1_l, p, "lstm1_lr", h);
  t.u1_r = lstm_last(q1_r, p, "lstm1_rl", h);

  // mu_r[j] = sum_i u1_l[i] W_mu[i][j]: a row vector times W_mu.
  const Mat W_mu = to_mat(p.at("W_mu"));
  const std::size_t c = W_mu[0].size();
  t.mu_l.assign(c, 0.0);
  t.mu_r.assign(c, 0.0);
  for (std::size_t j = 0; j < c; ++j) {
    for (std::size_t i = 0; i < h; ++i) {
      t.mu_r[j] += t.u1_l[i] * W_mu[i][j];
      t.mu_l[j] += t.u1_r[i] * W_mu[i][j];
    }
  }

  std::vector<Vec> q2_l{t.mu_l};
  for (const Vec& x : embed(p.at("W2_x"), pair.left)) q2_l.push_back(x);
  q2_l.push_back(t.mu_l);
  std::vector<Vec> q2_r{t.mu_r};
  for (const Vec& x : embed(p.at("W2_x"), pair.right)) q2_r.push_back(x);
  q2_r.push_back(t.mu_r);
  t.q2_l = q2_l.size();
  t.q2_r = q2_r.size();
  t.u2_l = lstm_last(q2_l, p, "lstm2_lr", h);
  t.u2_r = lstm_last(q2_r, p, "lstm2_rl", h);

  Vec all;
  for (const Vec* v : {&t.u1_l, &t.u1_r, &t.u2_l, &t.u2_r}) {
    all.insert(all.end(), v->begin(), v->end());
  }
  t.u_q = tanh_vec(matvec(to_mat(p.at("W_uq")), all));
  return t;
}

/// One-pass baselines: the stage-1 states that `kind` keeps, then W_uq.
inline Vec baseline(const ModelParams& p, const FragmentPair& pair, EncoderKind kind) {
  Vec all;
  if (kind == EncoderKind::kLeftOnly || kind == EncoderKind::kBiLstm) {
    const std::size_t h = p.at("lstm1_lr.b_i").size();
    const Vec u = lstm_last(embed(p.at("W1_x"), pair.left), p, "lstm1_lr", h);
    all.insert(all.end(), u.begin(), u.end());
  }
  if (kind == EncoderKind::kRightOnly || kind == EncoderKind::kBiLstm) {
    const std::size_t h = p.at("lstm1_rl.b_i").size();
    const Vec u = lstm_last(embed(p.at("W1_x"), pair.right), p, "lstm1_rl", h);
    all.insert(all.end(), u.begin(), u.end());
  }
  return tanh_vec(matvec(to_mat(p.at("W_uq")), all));
}

/// Elementwise max over frames of a frames x m x c_raw tensor.
inline Mat max_pool(const Tensor& spatial) {
  const std::size_t f = spatial.shape()[0];
  const std::size_t m = spatial.shape()[1];
  const std::size_t c = spatial.shape()[2];
  Mat out(m, Vec(c));
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      double best = spatial.data()[r * c + ch];
      for (std::size_t fr = 1; fr < f; ++fr) {
        best = std::max(best, spatial.data()[(fr * m + r) * c + ch]);
      }
      out[r][ch] = best;
    }
  }
  return out;
}

/// tanh(W rows^T): one output column per input row.
inline Mat project_rows(const Tensor& W, const Mat& rows) {
  const Mat w = to_mat(W);
  Mat out(w.size(), Vec(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < rows[j].size(); ++k) s += w[i][k] * rows[j][k];
      out[i][j] = std::tanh(s);
    }
  }
  return out;
}

inline Mat phi_F(const ModelParams& p, const Tensor& spatial) {
  return project_rows(p.at("W_f"), max_pool(spatial));
}

inline Mat phi_G(const ModelParams& p, const Tensor& shots) {
  return project_rows(p.at("W_g"), to_mat(shots));
}

struct Attention {
  Vec p;
  Vec pooled;
};

// Psi = tanh(W_align phi + (W_u u_q + b_u) repeated per column).
inline Mat align(const ModelParams& p, const std::string& W, const Mat& phi,
                 const Vec& u_q) {
  const Mat Wa = to_mat(p.at(W));
  const Mat Wu = to_mat(p.at("W_u"));
  const Vec bu = to_vec(p.at("b_u"));
  const std::size_t k = Wa.size();
  const std::size_t n = phi[0].size();
  Vec sentence(k);
  for (std::size_t i = 0; i < k; ++i) {
    sentence[i] = bu[i];
    for (std::size_t j = 0; j < u_q.size(); ++j) sentence[i] += Wu[i][j] * u_q[j];
  }
  Mat psi(k, Vec(n));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t col = 0; col < n; ++col) {
      double s = sentence[i];
      for (std::size_t j = 0; j < phi.size(); ++j) s += Wa[i][j] * phi[j][col];
      psi[i][col] = std::tanh(s);
    }
  }
  return psi;
}

inline Vec weighted_columns(const Mat& phi, const Vec& p) {
  Vec out(phi.size(), 0.0);
  for (std::size_t i = 0; i < phi.size(); ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) out[i] += phi[i][j] * p[j];
  }
  return out;
}

inline Attention spatial(const ModelParams& p, const Mat& phi, const Vec& u_q) {
  const Mat psi = align(p, "W_F", phi, u_q);
  const Vec w = to_vec(p.at("w_sp"));
  Vec scores(phi[0].size(), 0.0);
  for (std::size_t col = 0; col < scores.size(); ++col) {
    for (std::size_t i = 0; i < w.size(); ++i) scores[col] += psi[i][col] * w[i];
  }
  Attention a;
  a.p = softmax(scores);
  a.pooled = weighted_columns(phi, a.p);
  return a;
}

inline Attention temporal(const ModelParams& p, const Mat& phi, const Vec& u_q) {
  const Mat psi = align(p, "W_G", phi, u_q);
  const std::vector<Vec> steps = transpose(psi);  // one k-vector per shot
  const auto omega = lstm_states(steps, p, "lstm_tp");
  const Vec w = to_vec(p.at("w_tp"));
  Vec scores(steps.size(), 0.0);
  for (std::size_t s = 0; s < steps.size(); ++s) {
    for (std::size_t i = 0; i < w.size(); ++i) scores[s] += omega[s][i] * w[i];
  }
  Attention a;
  a.p = softmax(scores);
  a.pooled = weighted_columns(phi, a.p);
  return a;
}

inline Attention uniform(const Mat& phi) {
  Attention a;
  a.p.assign(phi[0].size(), 1.0 / static_cast<double>(phi[0].size()));
  a.pooled = weighted_columns(phi, a.p);
  return a;
}

inline Vec fuse(const std::vector<Vec>& parts) {
  Vec out(parts[0].size(), 0.0);
  for (const Vec& v : parts) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] += v[i];
  }
  return out;
}

inline Vec attribute(const ModelParams& p, const Vec& u_q, const Vec& u_sp,
                     const Vec& u_tp, const Vec& scores) {
  const Vec phi = fuse({u_q, u_sp, u_tp});
  Vec coeff = matvec(to_mat(p.at("W_c")), phi);
  for (double& x : coeff) x = x > 0.0 ? x : 0.0;
  Vec gated(coeff.size());
  for (std::size_t i = 0; i < coeff.size(); ++i) gated[i] = coeff[i] * scores[i];
  return tanh_vec(matvec(to_mat(p.at("W_Attr")), gated));
}

inline Vec logits(const ModelParams& p, const Vec& u) {
  return matvec(to_mat(p.at("W_blank")), u);
}

inline std::size_t ensemble(const std::vector<Vec>& probs) {
  return argmax(fuse(probs));
}

struct ForwardTrace {
  Vec u_q;
  Attention sp;
  Attention tp;
  Vec u;
  Vec logits;
};

/// Whole-model forward pass composed from the pieces above.
inline ForwardTrace forward(const ModelParams& p, const ModelConfig& config,
                            const FragmentPair& pair, const FeatureBundle& features,
                            const Vec& attributes) {
  ForwardTrace t;
  t.u_q = config.encoder == EncoderKind::kFull ? encoder(p, pair).u_q
                                               : baseline(p, pair, config.encoder);
  const Vec zero(t.u_q.size(), 0.0);
  std::vector<Vec> parts{t.u_q};
  Vec u_sp = zero;
  Vec u_tp = zero;
  if (config.spatial != AttentionMode::kOff) {
    const Mat phi = phi_F(p, features.spatial);
    t.sp = config.spatial == AttentionMode::kLearned ? spatial(p, phi, t.u_q)
                                                     : uniform(phi);
    u_sp = t.sp.pooled;
    parts.push_back(u_sp);
  }
  if (config.temporal != AttentionMode::kOff) {
    const Mat phi = phi_G(p, features.shots);
    t.tp = config.temporal == AttentionMode::kLearned ? temporal(p, phi, t.u_q)
                                                      : uniform(phi);
    u_tp = t.tp.pooled;
    parts.push_back(u_tp);
  }
  if (config.attributes) {
    Vec a = attributes;
    if (a.empty()) a.assign(config.dims.attributes, 0.0);
    parts.push_back(attribute(p, t.u_q, u_sp, u_tp, a));
  }
  t.u = fuse(parts);
  t.logits = logits(p, t.u);
  return t;
}

// Random inputs for property and oracle tests.

inline Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng,
                            double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& x : t.data()) x = rng.uniform(lo, hi);
  return t;
}

/// Overwrites every parameter entry (biases included) with U(-scale, scale).
inline void randomize(ModelParams& params, Rng& rng, double scale = 0.5) {
  for (auto& [symbol, t] : params) {
    for (double& x : t.data()) x = rng.uniform(-scale, scale);
  }
}

inline std::vector<std::size_t> random_ids(Rng& rng, std::size_t max_len,
                                           std::size_t vocab) {
  std::vector<std::size_t> ids(rng.index(max_len + 1));
  for (auto& id : ids) id = rng.index(vocab);
  return ids;
}

inline FragmentPair random_pair(Rng& rng, std::size_t max_len, std::size_t vocab) {
  FragmentPair p;
  p.left = random_ids(rng, max_len, vocab);
  p.right = random_ids(rng, max_len, vocab);
  return p;
}

inline FeatureBundle random_bundle(Rng& rng, std::size_t frames, const Dims& d) {
  FeatureBundle b;
  b.spatial = random_tensor({frames, d.m, d.c_raw}, rng);
  b.shots = random_tensor({d.shots, d.z}, rng);
  return b;
}

inline double max_diff(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_diff(const Tensor& a, const Vec& b) { return max_diff(to_vec(a), b); }

}  // namespace vfib::oracle
