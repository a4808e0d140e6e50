// Copyright 2026 The chordrec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.


#include "chordrec/crf.hpp"
#include "chordrec/errors.hpp"

#include "test_util.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

using namespace chordrec;
using Catch::Approx;

namespace {

CrfParams random_params(std::size_t k, std::size_t d, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    CrfParams p = CrfParams::zeros(k, d);
    for (Eigen::Index i = 0; i < p.transitions.size(); ++i) p.transitions.data()[i] = n(rng);
    for (Eigen::Index i = 0; i < p.observation.size(); ++i) p.observation.data()[i] = n(rng);
    for (Eigen::Index i = 0; i < p.bias.size(); ++i) {
        p.bias(i) = n(rng);
        p.initial(i) = n(rng);
        p.final(i) = n(rng);
    }
    return p;
}

Eigen::MatrixXd random_features(std::size_t d, std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    return x;
}

// Term-by-term evaluation of the energy.
double energy_oracle(const CrfParams& p, const Eigen::MatrixXd& x, const std::vector<int>& y) {
    double e = p.initial(y.front()) + p.final(y.back());
    for (std::size_t n = 0; n < y.size(); ++n) {
        e += p.bias(y[n]);
        for (Eigen::Index d = 0; d < x.rows(); ++d) e += x(d, static_cast<Eigen::Index>(n)) * p.observation(d, y[n]);
        if (n > 0) e += p.transitions(y[n - 1], y[n]);
    }
    return e;
}

struct Enumeration {
    double log_z = 0.0;
    Eigen::MatrixXd unary;
    Eigen::MatrixXd pairwise;
    std::vector<int> best;
};

// Visits all K^N label sequences.
Enumeration enumerate(const CrfParams& p, const Eigen::MatrixXd& x) {
    const std::size_t k = p.num_classes(), n = static_cast<std::size_t>(x.cols());
    std::vector<std::vector<int>> seqs;
    std::vector<double> energies;
    std::vector<int> y(n, 0);
    while (true) {
        seqs.push_back(y);
        energies.push_back(energy_oracle(p, x, y));
        std::size_t i = n;
        while (i > 0 && ++y[i - 1] == static_cast<int>(k)) y[--i] = 0;
        if (i == 0) break;
    }
    Enumeration r;
    const double mx = *std::max_element(energies.begin(), energies.end());
    double z = 0.0;
    for (double e : energies) z += std::exp(e - mx);
    r.log_z = mx + std::log(z);
    r.unary = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    r.pairwise = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    double best = -std::numeric_limits<double>::infinity();
    // Sequences are visited in lexicographic order, so strict improvement keeps the lowest-index tie.
    for (std::size_t s = 0; s < seqs.size(); ++s) {
        const double prob = std::exp(energies[s] - r.log_z);
        for (std::size_t t = 0; t < n; ++t) {
            r.unary(static_cast<Eigen::Index>(t), seqs[s][t]) += prob;
            if (t > 0) r.pairwise(seqs[s][t - 1], seqs[s][t]) += prob;
        }
        if (energies[s] > best) {
            best = energies[s];
            r.best = seqs[s];
        }
    }
    return r;
}

std::vector<int> framewise_argmax(const Eigen::MatrixXd& scores) {
    std::vector<int> out;
    for (Eigen::Index n = 0; n < scores.rows(); ++n) {
        Eigen::Index k = 0;
        scores.row(n).maxCoeff(&k);
        out.push_back(static_cast<int>(k));
    }
    return out;
}

}  // namespace

TEST_CASE("energy equals the term-by-term sum") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 20; ++t) {
        const auto p = random_params(4, 3, rng);
        const auto x = random_features(3, 5, rng);
        std::vector<int> y(5);
        for (auto& v : y) v = static_cast<int>(rng() % 4);
        CHECK(energy(p, x, y) == Approx(energy_oracle(p, x, y)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(energy(CrfParams::zeros(3, 2), Eigen::MatrixXd::Zero(2, 2), {0, 3}), DataError);
    CHECK_THROWS_AS(energy(CrfParams::zeros(3, 2), Eigen::MatrixXd::Zero(2, 2), {0}), DataError);
}

TEST_CASE("a single transition weight enters the energy once") {
    CrfParams p = CrfParams::zeros(3, 1);
    p.transitions(1, 2) = 5.0;
    const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, 2);
    CHECK(energy(p, x, {1, 2}) == 5.0);
    CHECK(energy(p, x, {2, 1}) == 0.0);
    CHECK(energy(CrfParams::zeros(25, 4), Eigen::MatrixXd::Ones(4, 7), std::vector<int>(7, 3)) == 0.0);
}

TEST_CASE("log partition of zero parameters counts label sequences") {
    const CrfParams p = CrfParams::zeros(25, 3);
    for (Eigen::Index n : {1, 4, 9}) {
        const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, n);
        CHECK(log_partition(p, x) == Approx(static_cast<double>(n) * std::log(25.0)).epsilon(1e-12));
        CHECK(sequence_log_likelihood(p, x, std::vector<int>(static_cast<std::size_t>(n), 7)) ==
              Approx(-static_cast<double>(n) * std::log(25.0)).epsilon(1e-12));
    }
}

TEST_CASE("shifting the bias shifts log Z by N times the shift") {
    std::mt19937_64 rng(2);
    CrfParams p = random_params(5, 4, rng);
    const auto x = random_features(4, 8, rng);
    const double before = log_partition(p, x);
    p.bias.array() += 0.7;
    CHECK(log_partition(p, x) == Approx(before + 8 * 0.7).epsilon(1e-12));
}

TEST_CASE("inference matches brute-force enumeration on random instances") {
    std::mt19937_64 rng(3);
    int checked = 0;
    for (int t = 0; t < 150; ++t) {
        const std::size_t k = 1 + rng() % 4, n = 1 + rng() % 6, d = 1 + rng() % 3;
        // Coarse integer potentials make exact ties common, exercising the tie rule.
        const bool ties = t % 3 == 0;
        auto p = ties ? CrfParams::zeros(k, d) : random_params(k, d, rng, 1.5);
        Eigen::MatrixXd x = random_features(d, n, rng);
        if (ties) {
            std::uniform_int_distribution<int> u(-1, 1);
            for (Eigen::Index i = 0; i < p.transitions.size(); ++i) p.transitions.data()[i] = u(rng);
            for (Eigen::Index i = 0; i < p.bias.size(); ++i) p.bias(i) = u(rng);
            x.setZero();
        }
        const auto oracle = enumerate(p, x);
        const auto fb = forward_backward(p, x);
        CHECK(std::abs(log_partition(p, x) - oracle.log_z) < 1e-8);
        CHECK(std::abs(fb.log_z - oracle.log_z) < 1e-8);
        CHECK((fb.unary - oracle.unary).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((fb.pairwise - oracle.pairwise).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(viterbi(p, x) == oracle.best);
        for (Eigen::Index i = 0; i < fb.unary.rows(); ++i) CHECK(fb.unary.row(i).sum() == Approx(1.0).epsilon(1e-9));
        ++checked;
    }
    CHECK(checked >= 100);
}

TEST_CASE("probabilities of all sequences sum to one") {
    std::mt19937_64 rng(4);
    const auto p = random_params(3, 2, rng);
    const auto x = random_features(2, 4, rng);
    double total = 0.0;
    std::vector<int> y(4, 0);
    for (int code = 0; code < 81; ++code) {
        int c = code;
        for (auto& v : y) {
            v = c % 3;
            c /= 3;
        }
        const double ll = sequence_log_likelihood(p, x, y);
        CHECK(ll <= 0.0);
        total += std::exp(ll);
    }
    CHECK(total == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pairwise marginals sum to the unary marginals") {
    std::mt19937_64 rng(5);
    const auto p = random_params(6, 5, rng);
    const auto x = random_features(5, 30, rng);
    const auto fb = forward_backward(p, x);
    // Row sums of the summed pairwise table equal the unary marginals of frames 0..N-2.
    const Eigen::VectorXd from_pairs = fb.pairwise.rowwise().sum();
    const Eigen::VectorXd from_unary = fb.unary.topRows(29).colwise().sum().transpose();
    CHECK((from_pairs - from_unary).cwiseAbs().maxCoeff() < 1e-9);
    const Eigen::VectorXd to_unary = fb.unary.bottomRows(29).colwise().sum().transpose();
    CHECK((fb.pairwise.colwise().sum().transpose() - to_unary).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("zero transitions and boundaries reduce to a frame-wise classifier") {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 50; ++t) {
        const std::size_t k = 2 + rng() % 24, d = 1 + rng() % 8, n = 1 + rng() % 40;
        Eigen::MatrixXd w = random_features(k, d, rng);
        Eigen::VectorXd b = random_features(k, 1, rng);
        const CrfParams p = CrfParams::from_classifier(w, b);
        const auto x = random_features(d, n, rng);
        const Eigen::MatrixXd scores = (w * x).colwise() + b;  // K x N
        Eigen::MatrixXd soft = scores.transpose();
        for (Eigen::Index i = 0; i < soft.rows(); ++i) {
            soft.row(i) = (soft.row(i).array() - soft.row(i).maxCoeff()).exp();
            soft.row(i) /= soft.row(i).sum();
        }
        CHECK(viterbi(p, x) == framewise_argmax(soft));
        CHECK((forward_backward(p, x).unary - soft).cwiseAbs().maxCoeff() < 1e-9);
        if (n == 1) {
            const int gold = static_cast<int>(rng() % k);
            CHECK(sequence_log_likelihood(p, x, {gold}) == Approx(std::log(soft(0, gold))).epsilon(1e-10));
        }
    }
}

TEST_CASE("decoding is invariant to constant shifts of any potential block") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 20; ++t) {
        const auto p = random_params(5, 3, rng);
        const auto x = random_features(3, 12, rng);
        const auto base = viterbi(p, x);
        auto a = p;
        a.transitions.array() += 3.0;
        auto b = p;
        b.bias.array() -= 2.0;
        auto c = p;
        c.initial.array() += 1.0;
        c.final.array() += -4.0;
        CHECK(viterbi(a, x) == base);
        CHECK(viterbi(b, x) == base);
        CHECK(viterbi(c, x) == base);
    }
}

TEST_CASE("sticky transitions smooth noisy frame decisions") {
    std::mt19937_64 rng(8);
    const std::size_t k = 4, n = 200;
    CrfParams p = CrfParams::from_classifier(Eigen::MatrixXd::Identity(k, k), Eigen::VectorXd::Zero(k));
    p.transitions = Eigen::MatrixXd::Constant(k, k, -3.0);
    p.transitions.diagonal().setZero();
    Eigen::MatrixXd x(k, n);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j)
            x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = (j == (i / 50) ? 1.0 : 0.0) + noise(rng);
    const auto smooth = viterbi(p, x);
    const auto raw = framewise_argmax(x.transpose());
    std::size_t ts = 0, tr = 0;
    for (std::size_t i = 1; i < n; ++i) {
        ts += smooth[i] != smooth[i - 1];
        tr += raw[i] != raw[i - 1];
    }
    CHECK(ts < tr);
}

TEST_CASE("nll gradient matches finite differences") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 5; ++t) {
        const auto p = random_params(4, 3, rng, 0.5);
        const auto x = random_features(3, 7, rng);
        std::vector<int> y(7);
        for (auto& v : y) v = static_cast<int>(rng() % 4);
        CrfParams g = CrfParams::zeros(4, 3);
        const double nll = nll_and_gradient(p, x, y, &g);
        CHECK(nll == Approx(-sequence_log_likelihood(p, x, y)).epsilon(1e-12));

        auto check_block = [&](auto member) {
            CrfParams q = p;
            auto& block = q.*member;
            const auto& analytic = g.*member;
            double worst = 0.0, scale = 1e-12;
            for (Eigen::Index i = 0; i < block.size(); ++i) {
                const double old = block.data()[i];
                block.data()[i] = old + 1e-6;
                const double up = -sequence_log_likelihood(q, x, y);
                block.data()[i] = old - 1e-6;
                const double down = -sequence_log_likelihood(q, x, y);
                block.data()[i] = old;
                const double numeric = (up - down) / 2e-6;
                worst = std::max(worst, std::abs(numeric - analytic.data()[i]));
                scale = std::max(scale, std::abs(numeric));
            }
            return worst / scale;
        };
        CHECK(check_block(&CrfParams::transitions) < 1e-6);
        CHECK(check_block(&CrfParams::observation) < 1e-6);
        CHECK(check_block(&CrfParams::bias) < 1e-6);
        CHECK(check_block(&CrfParams::initial) < 1e-6);
        CHECK(check_block(&CrfParams::final) < 1e-6);
    }
}

namespace {

// Three labels, each announced by its own feature; runs of 5 to 15 frames.
std::vector<CrfSequence> separable_sequences(std::size_t count, std::mt19937_64& rng, double noise_sd = 0.1) {
    std::vector<CrfSequence> out;
    std::normal_distribution<double> noise(0.0, noise_sd);
    for (std::size_t s = 0; s < count; ++s) {
        CrfSequence seq;
        int label = static_cast<int>(rng() % 3);
        while (seq.labels.size() < 60) {
            const std::size_t run = 5 + rng() % 11;
            for (std::size_t i = 0; i < run; ++i) seq.labels.push_back(label);
            label = (label + 1 + static_cast<int>(rng() % 2)) % 3;
        }
        seq.features = Eigen::MatrixXd::Zero(4, static_cast<Eigen::Index>(seq.labels.size()));
        for (std::size_t i = 0; i < seq.labels.size(); ++i) {
            seq.features(seq.labels[i], static_cast<Eigen::Index>(i)) = 1.0;
            for (Eigen::Index d = 0; d < 4; ++d) seq.features(d, static_cast<Eigen::Index>(i)) += noise(rng);
        }
        out.push_back(std::move(seq));
    }
    return out;
}

}  // namespace

TEST_CASE("training solves a separable sequence task") {
    std::mt19937_64 rng(10);
    const auto train = separable_sequences(12, rng);
    const auto val = separable_sequences(4, rng);
    CrfTrainConfig cfg;
    cfg.batch_size = 4;
    cfg.sequence_length = 32;
    cfg.l1 = 1e-4;
    cfg.max_epochs = 60;
    CrfTrainLog log;
    const CrfParams p = train_crf(train, val, cfg, &log);
    CHECK(viterbi_accuracy(p, train) == 1.0);
    CHECK(viterbi_accuracy(p, val) == 1.0);
    CHECK(p.num_classes() == 25);
    CHECK(log.best_validation_accuracy == 1.0);
    CHECK(log.epochs.size() <= log.best_epoch + cfg.patience);
}

TEST_CASE("a large l1 weight drives transitions to zero") {
    std::mt19937_64 rng(11);
    // Noisy features make the transitions worth learning.
    const auto train = separable_sequences(12, rng, 0.8);
    const auto val = separable_sequences(4, rng, 0.8);
    CrfTrainConfig cfg;
    cfg.batch_size = 4;
    cfg.sequence_length = 32;
    cfg.max_epochs = 40;
    cfg.patience = 40;
    cfg.l1 = 0.0;
    const CrfParams free = train_crf(train, val, cfg);
    cfg.l1 = 10.0;
    const CrfParams sparse = train_crf(train, val, cfg);
    auto off_diagonal = [](const CrfParams& p) {
        Eigen::MatrixXd a = p.transitions.topLeftCorner(3, 3);
        a.diagonal().setZero();
        return a.cwiseAbs().maxCoeff();
    };
    CHECK(off_diagonal(free) > 0.5);
    CHECK(off_diagonal(sparse) < 0.05);
}

TEST_CASE("crf parameters round trip through the container") {
    const auto dir = testing::temp_dir("crf");
    std::mt19937_64 rng(12);
    const auto p = random_params(25, 128, rng);
    p.save(dir / "crf.ckpt");
    const auto q = CrfParams::load(dir / "crf.ckpt");
    CHECK(q.transitions == p.transitions);
    CHECK(q.observation == p.observation);
    CHECK(q.bias == p.bias);
    CHECK(q.initial == p.initial);
    CHECK(q.final == p.final);
    CHECK(p.parameter_count() == 25 * 25 + 128 * 25 + 3 * 25);
    CHECK_THROWS_AS(CrfParams::load(dir / "none.ckpt"), DataError);
    auto bad = p;
    bad.bias(3) = std::nan("");
    CHECK_THROWS_AS(bad.validate(), DataError);
}
