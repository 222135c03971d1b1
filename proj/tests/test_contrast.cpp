// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "geocon/contrast.hpp"
#include "geocon/gradcheck.hpp"
#include "geocon/rng.hpp"

using namespace geocon;

namespace {

std::vector<double> unit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double n2 = 0.0;
  for (double& x : v) {
    x = rng.normal();
    n2 += x * x;
  }
  for (double& x : v) x /= std::sqrt(n2);
  return v;
}

ContrastBatch random_batch(Rng& rng, std::size_t dim = 6, std::size_t n_neg = 4) {
  ContrastBatch b;
  b.anchor = unit(rng, dim);
  b.positive = unit(rng, dim);
  for (std::size_t i = 0; i < n_neg; ++i) b.negatives.push_back(unit(rng, dim));
  for (std::size_t i = 0; i < n_neg; ++i) b.sims.push_back(rng.uniform());
  return b;
}

}  // namespace

TEST_CASE("similarity is the exponentiated cosine", "[contrast]") {
  const std::vector<double> h{1.0, 0.0};
  const std::vector<double> same{1.0, 0.0};
  const std::vector<double> orth{0.0, 1.0};
  const std::vector<double> anti{-1.0, 0.0};
  CHECK(similarity(h, same, 1.0) == Catch::Approx(std::exp(1.0)));
  CHECK(similarity(h, orth, 1.0) == Catch::Approx(1.0));
  CHECK(similarity(h, anti, 2.0) == Catch::Approx(std::exp(-2.0)));
}

TEST_CASE("loss_uni basics", "[contrast]") {
  Rng rng(1);
  // N=1, Q=1, s- = s+ -> log 2
  ContrastBatch b;
  b.anchor = {1.0, 0.0};
  b.positive = {0.0, 1.0};
  b.negatives = {{0.0, 1.0}};
  b.q = 1.0;
  const LossReport r = loss_uni(b);
  CHECK(r.loss == Catch::Approx(std::log(2.0)).epsilon(1e-14));

  // negatives at similarity ~0 (cosine pushed far down via gamma)
  ContrastBatch c;
  c.anchor = {1.0, 0.0};
  c.positive = {1.0, 0.0};
  c.negatives = {{-1.0, 0.0}};
  c.gamma = 30.0;  // s- / s+ = e^{-60} ~ 0
  CHECK(loss_uni(c).loss == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("loss_debiased basics and clamping", "[contrast]") {
  // tau+ = 0 reduces to uni with Q=1, gamma=1
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    ContrastBatch b = random_batch(rng);
    b.tau_plus = 0.0;
    ContrastBatch u = b;
    u.gamma = 1.0;
    u.q = 1.0;
    CHECK(loss_debiased(b).loss == Catch::Approx(loss_uni(u).loss).margin(1e-12));
  }

  // N=1, tau+=0.5, equal dots -> log(1 + (1-0.5)/0.5) = log 2
  ContrastBatch b;
  b.anchor = {1.0, 0.0};
  b.positive = {0.0, 1.0};
  b.negatives = {{0.0, 1.0}};
  b.tau_plus = 0.5;
  CHECK(loss_debiased(b).loss == Catch::Approx(std::log(2.0)).epsilon(1e-14));

  // strongly negative dots with tau+ near 1: clamped, finite, >= log(1+eps)
  ContrastBatch c;
  c.anchor = {1.0, 0.0};
  c.positive = {1.0, 0.0};
  c.negatives = {{-1.0, 0.0}};
  c.tau_plus = 0.99;
  const LossReport r = loss_debiased(c);
  CHECK(std::isfinite(r.loss));
  CHECK(r.loss >= std::log(1.0 + 1e-8));
  CHECK(r.loss >= 0.0);

  ContrastBatch bad = c;
  bad.tau_plus = 1.0;
  CHECK_THROWS_AS(loss_debiased(bad), config_error);
}

TEST_CASE("chem_weights arithmetic and fallback", "[contrast]") {
  {
    const auto [w, rho] = chem_weights({0.0, 0.0, 0.0, 0.0}, 0.0);
    for (double x : w) CHECK(x == 1.0);
    for (double r : rho) CHECK(r == 0.25);
  }
  {
    const auto [w, rho] = chem_weights({1.0, 0.0}, 0.0);
    CHECK(w[0] == 0.0);
    CHECK(w[1] == 1.0);
    CHECK(rho[0] == 0.0);
    CHECK(rho[1] == 1.0);
  }
  {
    const auto [w, rho] = chem_weights({0.3, 0.5}, 0.1);
    CHECK(w[0] == Catch::Approx(0.6));
    CHECK(w[1] == Catch::Approx(0.4));
    CHECK(rho[0] == Catch::Approx(0.6));
    CHECK(rho[1] == Catch::Approx(0.4));
  }
  {
    // all weights zero -> uniform fallback
    const auto [w, rho] = chem_weights({1.0, 1.0, 1.0}, 0.0);
    for (double x : w) CHECK(x == 0.0);
    for (double r : rho) CHECK(r == Catch::Approx(1.0 / 3.0));
  }
}

TEST_CASE("weight contract: rho >= 0, sums to one, zero above threshold", "[contrast]") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(6);
    std::vector<double> sims(n);
    for (double& s : sims) s = rng.uniform();
    const double tau = rng.uniform(0.0, 0.9);
    const auto [w, rho] = chem_weights(sims, tau);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(rho[i] >= 0.0);
      total += rho[i];
      if (sims[i] >= 1.0 - tau) CHECK(w[i] == 0.0);
    }
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("loss_chem: single surviving term", "[contrast]") {
  // N=2, rho=(1,0), equal dots on the surviving term -> log 2
  ContrastBatch b;
  b.anchor = {1.0, 0.0};
  b.positive = {0.0, 1.0};
  b.negatives = {{0.0, 1.0}, {0.6, 0.8}};
  b.sims = {0.0, 1.0};  // second negative fully silenced
  const LossReport r = loss_chem(b);
  CHECK(r.rho[0] == 1.0);
  CHECK(r.rho[1] == 0.0);
  CHECK(r.loss == Catch::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("reduction chain: chem(uniform) = uni(Q=1,gamma=1) = debiased(tau+=0)", "[contrast]") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    ContrastBatch b = random_batch(rng, 3 + rng.uniform_index(5), 1 + rng.uniform_index(5));
    for (double& s : b.sims) s = 0.37;  // equal sims -> uniform rho

    ContrastBatch uni = b;
    uni.gamma = 1.0;
    uni.q = 1.0;
    ContrastBatch deb = b;
    deb.tau_plus = 0.0;

    const double chem = loss_chem(b).loss;
    const double u = loss_uni(uni).loss;
    const double d = loss_debiased(deb).loss;
    CHECK(chem == Catch::Approx(u).margin(1e-12));
    CHECK(d == Catch::Approx(u).margin(1e-12));
  }
}

TEST_CASE("InfoNCE identity: uni at Q=N equals the log-softmax form", "[contrast]") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    ContrastBatch b = random_batch(rng, 4, 3);
    b.gamma = rng.uniform(0.5, 3.0);
    const double cp = dot(b.anchor, b.positive);
    const double sp = std::exp(b.gamma * cp);
    double denom = sp;
    for (const auto& neg : b.negatives)
      denom += std::exp(b.gamma * dot(b.anchor, neg));
    const double infonce = -std::log(sp / denom);
    CHECK(loss_infonce(b).loss == Catch::Approx(infonce).margin(1e-12));
  }
}

TEST_CASE("duplicate-positive negative leaves chem loss unchanged", "[contrast]") {
  Rng rng(6);
  ContrastBatch base = random_batch(rng, 5, 3);
  base.sims = {0.2, 0.2, 0.2};

  ContrastBatch padded = base;
  padded.negatives.push_back(base.positive);  // fake negative = the positive
  padded.sims.push_back(1.0);                 // Tanimoto 1 -> weight 0

  const LossReport a = loss_chem(base);
  const LossReport b = loss_chem(padded);
  CHECK(b.rho[3] == 0.0);
  CHECK(a.loss == Catch::Approx(b.loss).margin(1e-12));
}

TEST_CASE("all losses are non-negative", "[contrast]") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    ContrastBatch b = random_batch(rng, 3 + rng.uniform_index(4), 1 + rng.uniform_index(5));
    b.gamma = rng.uniform(0.2, 3.0);
    b.tau = rng.uniform(0.0, 0.8);
    b.tau_plus = rng.uniform(0.0, 0.95);
    CHECK(loss_uni(b).loss >= 0.0);
    CHECK(loss_infonce(b).loss >= 0.0);
    CHECK(loss_debiased(b).loss >= 0.0);
    CHECK(loss_chem(b).loss >= 0.0);
  }
}

TEST_CASE("monotonicity in the negative and positive cosines", "[contrast]") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    ContrastBatch b = random_batch(rng, 5, 3);
    b.tau_plus = rng.uniform(0.0, 0.5);

    // nudge one negative toward the anchor (raises its cosine)
    ContrastBatch harder = b;
    const std::size_t i = rng.uniform_index(3);
    double n2 = 0.0;
    for (std::size_t d = 0; d < 5; ++d) {
      harder.negatives[i][d] = 0.9 * harder.negatives[i][d] + 0.1 * b.anchor[d];
      n2 += harder.negatives[i][d] * harder.negatives[i][d];
    }
    for (std::size_t d = 0; d < 5; ++d) harder.negatives[i][d] /= std::sqrt(n2);
    if (dot(harder.negatives[i], harder.anchor) >= dot(b.negatives[i], b.anchor)) {
      CHECK(loss_uni(harder).loss >= loss_uni(b).loss - 1e-12);
      CHECK(loss_debiased(harder).loss >= loss_debiased(b).loss - 1e-12);
      CHECK(loss_chem(harder).loss >= loss_chem(b).loss - 1e-12);
    }

    // nudge the positive toward the anchor (raises c+): losses must not grow
    ContrastBatch easier = b;
    n2 = 0.0;
    for (std::size_t d = 0; d < 5; ++d) {
      easier.positive[d] = 0.9 * easier.positive[d] + 0.1 * b.anchor[d];
      n2 += easier.positive[d] * easier.positive[d];
    }
    for (std::size_t d = 0; d < 5; ++d) easier.positive[d] /= std::sqrt(n2);
    if (dot(easier.positive, easier.anchor) >= dot(b.positive, b.anchor)) {
      CHECK(loss_uni(easier).loss <= loss_uni(b).loss + 1e-12);
      CHECK(loss_debiased(easier).loss <= loss_debiased(b).loss + 1e-12);
      CHECK(loss_chem(easier).loss <= loss_chem(b).loss + 1e-12);
    }
  }
}

TEST_CASE("loss gradients match finite differences", "[contrast]") {
  const auto rep = gradcheck::check_loss_gradients(7, 200);
  INFO(rep.name << " max_ratio " << rep.max_ratio);
  CHECK(rep.pass());
}

TEST_CASE("batch validation rejects malformed input", "[contrast]") {
  ContrastBatch b;
  b.anchor = {1.0, 0.0};
  b.positive = {1.0};
  b.negatives = {{1.0, 0.0}};
  CHECK_THROWS_AS(loss_uni(b), config_error);

  ContrastBatch no_negs;
  no_negs.anchor = {1.0};
  no_negs.positive = {1.0};
  CHECK_THROWS_AS(loss_uni(no_negs), config_error);
}
