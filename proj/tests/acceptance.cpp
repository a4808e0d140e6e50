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


// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include "chordrec/analysis.hpp"
#include "chordrec/audio.hpp"
#include "chordrec/augmentation.hpp"
#include "chordrec/auditory_model.hpp"
#include "chordrec/crf.hpp"
#include "chordrec/errors.hpp"
#include "chordrec/evaluation.hpp"
#include "chordrec/frontend.hpp"
#include "chordrec/layers.hpp"
#include "chordrec/pipeline.hpp"
#include "chordrec/synth.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

using namespace chordrec;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

template <typename T>
Tensor<T> random_tensor(const Shape& shape, std::mt19937_64& rng, double scale = 1.0) {
    Tensor<T> t(shape);
    std::normal_distribution<double> n(0.0, scale);
    for (auto& v : t.span()) v = static_cast<T>(n(rng));
    return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Tensor<double> numeric_gradient(Tensor<double>& x, const std::function<double()>& f, double h = 1e-6) {
    Tensor<double> g(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double old = x[i];
        x[i] = old + h;
        const double up = f();
        x[i] = old - h;
        const double down = f();
        x[i] = old;
        g[i] = (up - down) / (2 * h);
    }
    return g;
}

double relative_error(const Tensor<double>& a, const Tensor<double>& b) {
    double diff = 0.0, scale = 1e-12;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(a[i] - b[i]));
        scale = std::max(scale, std::max(std::abs(a[i]), std::abs(b[i])));
    }
    return diff / scale;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---------------------------------------------------------------- 1

Outcome criterion_shapes() {
    const auto t0 = Clock::now();
    const AuditoryModel m = AuditoryModel::build(0);
    std::map<std::string, Shape> trace;
    for (const auto& e : m.network().shape_trace()) trace[e.layer] = e.output;
    // Output Size column, one entry per table row; the averaging row's 25x1x1 is held as 25.
    const std::vector<std::pair<std::string, Shape>> table{
        {"relu1", {32, 105, 15}}, {"relu2", {32, 105, 15}}, {"relu3", {32, 105, 15}}, {"relu4", {32, 105, 15}},
        {"pool1", {32, 52, 15}},  {"relu5", {64, 50, 13}},  {"relu6", {64, 48, 11}},  {"pool2", {64, 24, 11}},
        {"relu7", {128, 13, 3}},  {"conv8", {25, 13, 3}},   {"gap", {25}},            {"softmax", {25}}};
    std::size_t matched = 0;
    for (const auto& [name, shape] : table) matched += trace.count(name) && trace.at(name) == shape;

    const Filterbank fb = build_log_filterbank(44100, 8192);
    Spectrogram s;
    s.values = RowMatrixF::Zero(30, static_cast<Eigen::Index>(fb.num_bands()));
    const auto w = context_window(s, 0);
    const double secs = seconds_since(t0);
    const bool ok = matched == table.size() && m.network().input_shape() == Shape{1, 105, 15} && fb.num_bands() == 105 &&
                    w.values.rows() == 105 && w.values.cols() == 15 && secs < 1.0;
    return {ok, std::to_string(matched) + "/" + std::to_string(table.size()) + " table rows, " +
                    std::to_string(fb.num_bands()) + " bands, window " + std::to_string(w.values.rows()) + "x" +
                    std::to_string(w.values.cols()) + fmt(", %.3fs", secs)};
}

// ---------------------------------------------------------------- 2

Outcome criterion_parameters() {
    const std::size_t n = AuditoryModel::build(0).network().trainable_parameter_count();
    return {n >= 880000 && n <= 1000000, std::to_string(n) + " trainable parameters"};
}

// ---------------------------------------------------------------- 3

Outcome criterion_gradients() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(3);
    double worst = 0.0;
    std::string worst_name;
    auto record = [&](const std::string& name, double err) {
        if (err > worst || !(err == err)) {
            worst = err;
            worst_name = name;
        }
    };

    for (Padding pad : {Padding::Same, Padding::Valid}) {
        auto x = random_tensor<double>({2, 2, 6, 5}, rng);
        auto k = random_tensor<double>({3, 2, 3, 3}, rng);
        const auto r = random_tensor<double>(conv2d(x, k, pad).shape(), rng);
        const auto g = conv2d_backward(r, x, k, pad);
        auto f = [&] { return dot(conv2d(x, k, pad), r); };
        record("conv input", relative_error(g.input, numeric_gradient(x, f)));
        record("conv kernels", relative_error(g.kernels, numeric_gradient(k, f)));
    }
    {
        auto x = random_tensor<double>({2, 3, 2, 2}, rng);
        auto b = random_tensor<double>({3}, rng);
        const auto r = random_tensor<double>(x.shape(), rng);
        record("conv bias", relative_error(channel_sum(r), numeric_gradient(b, [&] {
                                               auto y = x;
                                               add_channel_bias(y, b);
                                               return dot(y, r);
                                           })));
    }
    {
        auto x = random_tensor<double>({3, 2, 3, 2}, rng);
        auto scale = random_tensor<double>({2}, rng);
        auto offset = random_tensor<double>({2}, rng);
        const auto r = random_tensor<double>(x.shape(), rng);
        const BatchNormRunning<double> run{random_tensor<double>({2}, rng), Tensor<double>(Shape{2}, 2.0)};
        auto f = [&] {
            auto tmp = run;
            return dot(batchnorm_train<double>(x, scale, offset, tmp, nullptr), r);
        };
        BatchNormCache<double> cache;
        auto tmp = run;
        batchnorm_train(x, scale, offset, tmp, &cache);
        const auto g = batchnorm_backward(r, cache, scale);
        record("batchnorm input", relative_error(g.input, numeric_gradient(x, f)));
        record("batchnorm scale", relative_error(g.scale, numeric_gradient(scale, f)));
        record("batchnorm offset", relative_error(g.offset, numeric_gradient(offset, f)));
        auto fi = [&] { return dot(batchnorm_infer(x, scale, offset, run), r); };
        const auto gi = batchnorm_infer_backward(r, x, scale, run);
        record("batchnorm(infer) input", relative_error(gi.input, numeric_gradient(x, fi)));
    }
    {
        auto x = random_tensor<double>({2, 2, 5, 3}, rng);
        const auto r = random_tensor<double>(x.shape(), rng);
        record("rectify", relative_error(rectify_backward(r, rectify(x)), numeric_gradient(x, [&] { return dot(rectify(x), r); })));
        std::vector<std::size_t> am;
        const auto y = maxpool(x, 2, 1, &am);
        const auto rp = random_tensor<double>(y.shape(), rng);
        record("maxpool", relative_error(maxpool_backward(rp, am, x.shape()),
                                         numeric_gradient(x, [&] { return dot(maxpool(x, 2, 1), rp); })));
        const auto rg = random_tensor<double>(global_average_pool(x).shape(), rng);
        record("average pool", relative_error(global_average_pool_backward(rg, x.shape()),
                                              numeric_gradient(x, [&] { return dot(global_average_pool(x), rg); })));
        std::vector<double> mask;
        std::mt19937_64 drng(5);
        dropout(x, 0.5, Mode::Train, drng, &mask);
        record("dropout", relative_error(apply_mask(r, mask), numeric_gradient(x, [&] { return dot(apply_mask(x, mask), r); })));
    }
    {
        auto z = random_tensor<double>({3, 7}, rng, 2.0);
        const auto p = softmax(z);
        const auto r = random_tensor<double>(z.shape(), rng);
        record("softmax", relative_error(softmax_backward(r, p), numeric_gradient(z, [&] { return dot(softmax(z), r); })));
    }
    // Full training loss (cross-entropy plus weighted l2 norm) through a small network.
    {
        const std::vector<LayerSpec> specs{
            LayerSpec::conv("c1", 3, 3, 3, Padding::Same), LayerSpec::batchnorm("b1"), LayerSpec::rectify("r1"),
            LayerSpec::maxpool("p1", 2, 1), LayerSpec::dropout("d1"), LayerSpec::conv("c2", 4, 3, 2, Padding::Valid),
            LayerSpec::batchnorm("b2"), LayerSpec::rectify("r2"), LayerSpec::conv("c3", 5, 1, 1, Padding::Valid, true),
            LayerSpec::avgpool("g"), LayerSpec::softmax("s")};
        Network<double> net(Shape{1, 8, 4}, specs, 11);
        auto x = random_tensor<double>({4, 1, 8, 4}, rng);
        const std::vector<int> labels{1, 4, 0, 2};
        const auto y = one_hot<double>(labels, 5);
        const double lambda = 0.05;
        auto params = net.parameters();
        std::vector<const Tensor<double>*> values;
        std::vector<Tensor<double>*> grads;
        for (auto& p : params) {
            values.push_back(p.value);
            grads.push_back(p.grad);
        }
        net.zero_grad();
        const auto p = net.forward(x, Mode::Train);
        const auto gx = net.backward(cross_entropy_softmax_grad(p, y), net.num_layers() - 1);
        add_l2_norm_gradient<double>(values, grads, lambda);
        net.hold_dropout_masks(true);
        auto loss = [&] { return cross_entropy_l2_loss<double>(net.forward(x, Mode::Train), y, values, lambda); };
        record("loss wrt input", relative_error(gx, numeric_gradient(x, loss)));
        for (auto& ref : params) {
            const Tensor<double> analytic = *ref.grad;
            record("loss wrt " + ref.name, relative_error(analytic, numeric_gradient(*ref.value, loss)));
        }
    }
    // CRF negative log-likelihood.
    {
        std::normal_distribution<double> n(0.0, 0.7);
        CrfParams p = CrfParams::zeros(4, 3);
        for (auto* block : {&p.transitions, &p.observation})
            for (Eigen::Index i = 0; i < block->size(); ++i) block->data()[i] = n(rng);
        for (auto* v : {&p.bias, &p.initial, &p.final})
            for (Eigen::Index i = 0; i < v->size(); ++i) (*v)(i) = n(rng);
        Eigen::MatrixXd x(3, 6);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
        const std::vector<int> y{0, 1, 1, 3, 2, 0};
        CrfParams g = CrfParams::zeros(4, 3);
        nll_and_gradient(p, x, y, &g);
        auto check = [&](Eigen::MatrixXd CrfParams::*m) {
            CrfParams q = p;
            Tensor<double> analytic(Shape{static_cast<std::size_t>((g.*m).size())}), numeric(analytic.shape());
            for (Eigen::Index i = 0; i < (q.*m).size(); ++i) {
                analytic[static_cast<std::size_t>(i)] = (g.*m).data()[i];
                const double old = (q.*m).data()[i];
                (q.*m).data()[i] = old + 1e-6;
                const double up = -sequence_log_likelihood(q, x, y);
                (q.*m).data()[i] = old - 1e-6;
                const double down = -sequence_log_likelihood(q, x, y);
                (q.*m).data()[i] = old;
                numeric[static_cast<std::size_t>(i)] = (up - down) / 2e-6;
            }
            return relative_error(analytic, numeric);
        };
        auto checkv = [&](Eigen::VectorXd CrfParams::*m) {
            CrfParams q = p;
            Tensor<double> analytic(Shape{static_cast<std::size_t>((g.*m).size())}), numeric(analytic.shape());
            for (Eigen::Index i = 0; i < (q.*m).size(); ++i) {
                analytic[static_cast<std::size_t>(i)] = (g.*m)(i);
                const double old = (q.*m)(i);
                (q.*m)(i) = old + 1e-6;
                const double up = -sequence_log_likelihood(q, x, y);
                (q.*m)(i) = old - 1e-6;
                const double down = -sequence_log_likelihood(q, x, y);
                (q.*m)(i) = old;
                numeric[static_cast<std::size_t>(i)] = (up - down) / 2e-6;
            }
            return relative_error(analytic, numeric);
        };
        record("crf transitions", check(&CrfParams::transitions));
        record("crf observation", check(&CrfParams::observation));
        record("crf bias", checkv(&CrfParams::bias));
        record("crf initial", checkv(&CrfParams::initial));
        record("crf final", checkv(&CrfParams::final));
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-4 && secs < 60.0,
            fmt("max relative error %.2e", worst) + " (" + worst_name + ")" + fmt(", %.1fs", secs)};
}

// ---------------------------------------------------------------- 4

Outcome criterion_crf_exactness() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.5);
    std::size_t instances = 0, failures = 0;
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t k = 1 + rng() % 4, len = 1 + rng() % 6, d = 1 + rng() % 3;
        CrfParams p = CrfParams::zeros(k, d);
        for (auto* block : {&p.transitions, &p.observation})
            for (Eigen::Index i = 0; i < block->size(); ++i) block->data()[i] = n(rng);
        for (auto* v : {&p.bias, &p.initial, &p.final})
            for (Eigen::Index i = 0; i < v->size(); ++i) (*v)(i) = n(rng);
        Eigen::MatrixXd x(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(len));
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);

        // Enumerate all k^len sequences with a direct energy sum.
        std::vector<int> y(len, 0), best;
        std::vector<double> energies;
        std::vector<std::vector<int>> seqs;
        double best_e = -INFINITY;
        while (true) {
            double e = p.initial(y.front()) + p.final(y.back());
            for (std::size_t i = 0; i < len; ++i) {
                e += p.bias(y[i]) + x.col(static_cast<Eigen::Index>(i)).dot(p.observation.col(y[i]));
                if (i > 0) e += p.transitions(y[i - 1], y[i]);
            }
            if (e > best_e) {
                best_e = e;
                best = y;
            }
            energies.push_back(e);
            seqs.push_back(y);
            std::size_t i = len;
            while (i > 0 && ++y[i - 1] == static_cast<int>(k)) y[--i] = 0;
            if (i == 0) break;
        }
        double mx = -INFINITY, z = 0.0;
        for (double e : energies) mx = std::max(mx, e);
        for (double e : energies) z += std::exp(e - mx);
        const double log_z = mx + std::log(z);
        Eigen::MatrixXd unary = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(k));
        Eigen::MatrixXd pair = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
        for (std::size_t s = 0; s < seqs.size(); ++s) {
            const double prob = std::exp(energies[s] - log_z);
            for (std::size_t i = 0; i < len; ++i) {
                unary(static_cast<Eigen::Index>(i), seqs[s][i]) += prob;
                if (i > 0) pair(seqs[s][i - 1], seqs[s][i]) += prob;
            }
        }
        const Marginals fb = forward_backward(p, x);
        const double err = std::max({std::abs(log_partition(p, x) - log_z), std::abs(fb.log_z - log_z),
                                     (fb.unary - unary).cwiseAbs().maxCoeff(), (fb.pairwise - pair).cwiseAbs().maxCoeff()});
        worst = std::max(worst, err);
        failures += err >= 1e-8 || viterbi(p, x) != best;
        ++instances;
    }
    const double secs = seconds_since(t0);
    return {instances >= 100 && failures == 0 && secs < 30.0,
            std::to_string(instances) + " instances, " + std::to_string(failures) + " mismatches" +
                fmt(", max error %.1e", worst) + fmt(", %.2fs", secs)};
}

// ---------------------------------------------------------------- 5

Spectrogram random_spectrogram(std::size_t frames, std::mt19937_64& rng) {
    Spectrogram s;
    s.values = RowMatrixF::Zero(static_cast<Eigen::Index>(frames), 105);
    std::gamma_distribution<float> g(2.0f, 0.5f);
    for (Eigen::Index i = 0; i < s.values.size(); ++i) s.values.data()[i] = g(rng);
    return s;
}

Outcome criterion_degeneracy() {
    std::mt19937_64 rng(5);
    std::size_t frames = 0, mismatches = 0;
    // CNN feature route: zero-transition CRF built from the classifier weights versus the softmax output.
    for (std::uint64_t seed : {1, 2, 3}) {
        const AuditoryModel m = AuditoryModel::build(seed);
        const Spectrogram s = random_spectrogram(60, rng);
        Eigen::MatrixXd probs, feats;
        m.analyse_sequence(s, &probs, &feats);
        const auto path = viterbi(CrfParams::from_classifier(m.gap_weights(), m.gap_bias()), feats);
        for (Eigen::Index i = 0; i < probs.rows(); ++i) {
            Eigen::Index k = 0;
            probs.row(i).maxCoeff(&k);
            mismatches += path[static_cast<std::size_t>(i)] != static_cast<int>(k);
            ++frames;
        }
    }
    // Random logistic-regression instances with 25 classes.
    std::normal_distribution<double> n;
    for (int t = 0; t < 50; ++t) {
        Eigen::MatrixXd w(25, 16), x(16, 40);
        Eigen::VectorXd b(25);
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = n(rng);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
        for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = n(rng);
        const auto path = viterbi(CrfParams::from_classifier(w, b), x);
        const Eigen::MatrixXd scores = (w * x).colwise() + b;
        for (Eigen::Index i = 0; i < x.cols(); ++i) {
            Eigen::VectorXd e = (scores.col(i).array() - scores.col(i).maxCoeff()).exp();
            e /= e.sum();
            Eigen::Index k = 0;
            e.maxCoeff(&k);
            mismatches += path[static_cast<std::size_t>(i)] != static_cast<int>(k);
            ++frames;
        }
    }
    return {mismatches == 0, std::to_string(frames) + " frames, " + std::to_string(mismatches) + " differ"};
}

// ---------------------------------------------------------------- 6

Outcome criterion_averaging_pull() {
    const AuditoryModel m = AuditoryModel::build(6);
    // Double-precision copy of the trained-format network.
    Network<double> net(m.network().input_shape(), m.network().specs(), 0);
    NamedTensors<double> state;
    for (const auto& [name, t] : m.network().state()) {
        Tensor<double> d(t.shape());
        for (std::size_t i = 0; i < t.size(); ++i) d[i] = t[i];
        state.emplace(name, std::move(d));
    }
    net.load_state(state);
    const std::size_t tap_end = net.layer_index("relu7") + 1;
    const std::size_t gap_end = net.layer_index("gap") + 1;
    const Tensor<double>& k = net.tensor("conv8.kernels");
    const Tensor<double>& bias = net.tensor("conv8.bias");

    std::mt19937_64 rng(6);
    std::gamma_distribution<double> g(2.0, 0.5);
    double worst = 0.0;
    const std::size_t inputs = 100;
    for (std::size_t trial = 0; trial < inputs; ++trial) {
        Tensor<double> x(Shape{1, 1, 105, 15});
        for (auto& v : x.span()) v = g(rng);
        const Tensor<double> scores = net.infer(x, gap_end);  // 1x1 conv, then average
        const Tensor<double> maps = net.infer(x, tap_end);     // [1, 128, 13, 3]
        const std::size_t area = maps.dim(2) * maps.dim(3);
        std::vector<double> fbar(128, 0.0);
        for (std::size_t c = 0; c < 128; ++c) {
            for (std::size_t i = 0; i < area; ++i) fbar[c] += maps[c * area + i];
            fbar[c] /= static_cast<double>(area);
        }
        for (std::size_t cls = 0; cls < 25; ++cls) {
            double z = bias[cls];
            for (std::size_t c = 0; c < 128; ++c) z += k[cls * 128 + c] * fbar[c];
            worst = std::max(worst, std::abs(z - scores[cls]));
        }
    }
    return {worst < 1e-6, std::to_string(inputs) + " inputs" + fmt(", max |difference| %.2e", worst)};
}

// ---------------------------------------------------------------- 7

Outcome criterion_augmentation() {
    std::mt19937_64 rng(7);
    std::size_t label_errors = 0, restore_errors = 0, detune_label_errors = 0;
    double worst_energy = 0.0;
    std::gamma_distribution<float> g(2.0f, 0.5f);
    for (int trial = 0; trial < 20; ++trial) {
        ContextWindow w;
        w.values = RowMatrixF::Zero(105, 15);
        for (Eigen::Index i = 0; i < w.values.size(); ++i) w.values.data()[i] = g(rng);
        for (int cls = 0; cls < 25; ++cls) {
            for (int k = -4; k <= 4; ++k) {
                const ChordLabel label(cls);
                const auto [shifted, moved] = semitone_shift(w, label, k);
                ChordLabel expect = label;
                if (label.is_major()) expect = ChordLabel::major(((cls + k) % 12 + 12) % 12);
                if (label.is_minor()) expect = ChordLabel::minor((((cls - 12) + k) % 12 + 12) % 12);
                label_errors += moved != expect;
                if (cls != 0) continue;
                const auto [back, original] = semitone_shift(shifted, moved, -k);
                label_errors += original != label;
                // rows that never left the window come back unchanged
                const Eigen::Index lost = 2 * std::abs(k);
                const Eigen::Index first = k < 0 ? lost : 0;
                for (Eigen::Index r = first; r < first + 105 - lost; ++r)
                    restore_errors += (back.values.row(r).array() != w.values.row(r).array()).count();
            }
        }
        // Detuning: energy of content placed away from the edges is kept.
        ContextWindow inner = w;
        inner.values.topRows(8).setZero();
        inner.values.bottomRows(8).setZero();
        for (double delta : {-0.4, -0.25, -0.1, 0.1, 0.3, 0.4}) {
            const ContextWindow d = detune_shift(inner, delta);
            for (Eigen::Index c = 0; c < 15; ++c) {
                const double before = inner.values.col(c).sum(), after = d.values.col(c).sum();
                worst_energy = std::max(worst_energy, std::abs(after - before) / before);
            }
            detune_label_errors += d.values.rows() != 105;
        }
    }
    const bool ok = label_errors == 0 && restore_errors == 0 && detune_label_errors == 0 && worst_energy < 0.02;
    return {ok, std::to_string(label_errors) + " label errors, " + std::to_string(restore_errors) +
                    " unrestored values" + fmt(", max detune energy change %.2e", worst_energy)};
}

// ---------------------------------------------------------------- 8

Outcome criterion_wcsr() {
    const ChordLabel C = ChordLabel::major(0), Am = ChordLabel::minor(9), G = ChordLabel::major(7),
                     N = ChordLabel::no_chord();
    const LabelSegments song{{{0, 2, C}, {2, 5, Am}, {5, 6, N}, {6, 9, G}}};
    const auto perfect = wcsr(song, song).score();
    const auto half = wcsr(LabelSegments{{{0, 5, C}, {5, 10, Am}}}, LabelSegments{{{0, 10, C}}}).score();
    const auto excluded = wcsr(LabelSegments{{{0, 10, C}}}, LabelSegments{{{0, 8, C}, {8, 10, N}}}).score();
    const auto undefined = wcsr(LabelSegments{{{0, 10, C}}}, LabelSegments{{{0, 10, N}}}).score();
    const bool ok = perfect == 1.0 && half == 0.5 && excluded == 1.0 && !undefined.has_value();
    return {ok, "perfect " + fmt("%.17g", perfect.value_or(-1)) + ", half " + fmt("%.17g", half.value_or(-1)) +
                    ", no-chord excluded " + fmt("%.17g", excluded.value_or(-1)) +
                    (undefined ? ", t_a = 0 gave a value" : ", t_a = 0 undefined")};
}

// ---------------------------------------------------------------- 9

struct ToyRun {
    bool ok = false;
    std::filesystem::path root;
    PipelineConfig config;
};

constexpr std::size_t kToySongs = 40;
constexpr double kToySeconds = 6.0;
constexpr double kToyNoise = 0.05;
// Extra noise added to copies of the test songs for the transition comparison.
constexpr double kTestNoise = 0.15;

std::vector<float> with_noise(std::vector<float> samples, double sd, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, sd);
    for (auto& s : samples) s = std::clamp(s + static_cast<float>(n(rng)), -1.0f, 1.0f);
    return samples;
}

std::vector<int> indices(const std::vector<ChordLabel>& labels) {
    std::vector<int> out;
    for (const auto& l : labels) out.push_back(l.index());
    return out;
}

PipelineConfig toy_config(const std::filesystem::path& root) {
    PipelineConfig cfg;
    cfg.manifest = root / "corpus" / "manifest.json";
    cfg.output = root / "out";
    cfg.test_folds = {0};
    cfg.cnn.batch_size = 32;
    cfg.cnn.max_epochs = 12;
    cfg.cnn.target_validation_accuracy = 0.97;
    cfg.crf.batch_size = 4;
    cfg.crf.max_epochs = 100;
    cfg.validate();
    return cfg;
}

Outcome criterion_end_to_end(ToyRun& run) {
    const auto t0 = Clock::now();
    run.root = std::filesystem::temp_directory_path() / ("chordrec_acceptance_" + std::to_string(::getpid()));
    std::filesystem::remove_all(run.root);

    SynthConfig sc;
    sc.num_songs = kToySongs;
    sc.song_seconds = kToySeconds;
    sc.noise_level = kToyNoise;
    sc.seed = 2024;
    write_synthetic_corpus(sc, run.root / "corpus");
    run.config = toy_config(run.root);

    std::ostringstream log;
    const auto report = cmd_extract(run.config, log);
    if (!report.failures.empty()) return {false, "extraction failed: " + report.failures.front()};
    const TrainReport tr = cmd_train(run.config, TrainStage::All, log);
    cmd_predict_corpus(run.config, log);

    const OutputLayout out{run.config.output};
    const auto eval = cmd_evaluate(out.predictions(), run.root / "corpus");
    // Only test-fold songs have predictions; the rest are reported missing.
    std::vector<WcsrResult> scored;
    std::size_t viterbi_changes = 0, argmax_changes = 0, test_songs = 0;
    const auto noisy_dir = run.root / "noisy";
    std::filesystem::create_directories(noisy_dir);
    for (const auto& s : eval.songs) {
        if (!s.error.empty()) continue;
        scored.push_back(s.result);
        const AudioBuffer audio = decode_audio(run.root / "corpus" / (s.id + ".wav"));
        const auto wav = noisy_dir / (s.id + ".wav");
        write_wav(wav, with_noise(audio.samples, kTestNoise, 100 + test_songs), 1, 44100, SampleFormat::Int16);
        const Prediction p = cmd_predict(run.config, wav, noisy_dir / (s.id + ".lab"), false, log);
        viterbi_changes += count_transitions(indices(p.viterbi));
        argmax_changes += count_transitions(indices(p.argmax));
        ++test_songs;
    }
    if (scored.empty()) return {false, "no test songs were scored"};
    const double score = corpus_wcsr(scored);
    const double secs = seconds_since(t0);
    run.ok = true;
    const bool ok = score >= 0.90 && viterbi_changes < argmax_changes && secs <= 600.0;
    return {ok, fmt("WCSR %.4f", score) + " on " + std::to_string(test_songs) + " test songs, transitions with extra noise " +
                    fmt("%.2f", kTestNoise) + ": viterbi " + std::to_string(viterbi_changes) + " < argmax " +
                    std::to_string(argmax_changes) + ", cnn " + std::to_string(tr.cnn.epochs.size()) + " epochs (val " +
                    fmt("%.3f", tr.cnn.best_validation_accuracy) + "), crf " + std::to_string(tr.crf.epochs.size()) +
                    " epochs" + fmt(", %.0fs", secs)};
}

// ---------------------------------------------------------------- 10

Outcome criterion_analysis(const ToyRun& run) {
    if (!run.ok) return {false, "toy model unavailable"};
    const OutputLayout out{run.config.output};
    const AuditoryModel m = AuditoryModel::load(out.cnn_checkpoint());
    const auto result = emit_analysis(m.gap_weights(), out.analysis());

    const Eigen::MatrixXd& c = result.correlation.values;
    bool symmetric = c.rows() == 25 && c.cols() == 25, unit = true;
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
        unit &= c(i, i) == 1.0;
        for (Eigen::Index j = 0; j < c.cols(); ++j) symmetric &= c(i, j) == c(j, i);
    }

    // Triad-membership oracle: a class contains p if p is its root, third or fifth.
    std::size_t set_errors = 0;
    std::vector<int> uses(24, 0);
    for (int p = 0; p < 12; ++p) {
        std::set<int> oracle;
        for (int cls = 0; cls < 24; ++cls) {
            const int root = cls % 12, third = cls < 12 ? 4 : 3;
            if (p == root || p == (root + third) % 12 || p == (root + 7) % 12) oracle.insert(cls);
        }
        const auto got = chords_containing(p);
        const std::set<int> used(got.begin(), got.end());
        set_errors += used != oracle || oracle.size() != 6;
        for (int cls : got) ++uses[static_cast<std::size_t>(cls)];
    }
    for (int u : uses) set_errors += u != 3;

    const Eigen::MatrixXd w = m.gap_weights();
    double profile_err = 0.0;
    for (int p = 0; p < 12; ++p) {
        Eigen::RowVectorXd expect = Eigen::RowVectorXd::Ones(128);
        for (int cls : chords_containing(p)) expect = expect.cwiseProduct(w.row(cls));
        profile_err = std::max(profile_err, (result.pitch_class.values.row(p) - expect).cwiseAbs().maxCoeff());
    }
    const bool ok = symmetric && unit && set_errors == 0 && profile_err == 0.0;
    return {ok, std::string(symmetric ? "symmetric" : "asymmetric") + ", " + (unit ? "unit" : "non-unit") +
                    " diagonal, " + std::to_string(set_errors) + " chord-set errors" +
                    fmt(", profile error %.1e", profile_err)};
}


// ---------------------------------------------------------------- toy-model examples

Outcome example_predictions(const ToyRun& run) {
    if (!run.ok) return {false, "toy model unavailable"};
    const auto dir = run.root / "examples";
    std::filesystem::create_directories(dir);
    std::mt19937_64 rng(10);
    // Same noise floor as the toy corpus.
    const auto chord = with_noise(render_chord(ChordLabel::major(0), 5.0, 44100.0, rng), kToyNoise, 11);
    write_wav(dir / "c_major.wav", chord, 1, 44100, SampleFormat::Int16);
    write_wav(dir / "silence.wav", std::vector<float>(5 * 44100, 0.0f), 1, 44100, SampleFormat::Int16);

    std::ostringstream log;
    const Prediction c = cmd_predict(run.config, dir / "c_major.wav", dir / "c_major.lab", false, log);
    const Prediction n = cmd_predict(run.config, dir / "silence.wav", dir / "silence.lab", false, log);
    auto share = [](const Prediction& p, ChordLabel label) {
        double hit = 0;
        for (const auto& l : p.viterbi) hit += l == label;
        return hit / static_cast<double>(p.viterbi.size());
    };
    const auto segments = segments_from_frames(c.viterbi, c.frame_rate);
    double longest = 0.0;
    ChordLabel dominant;
    for (const auto& s : segments.segments)
        if (s.end - s.start > longest) {
            longest = s.end - s.start;
            dominant = s.label;
        }
    const double duration = segments.end_time();
    const bool ok = dominant == ChordLabel::major(0) && longest > 0.5 * duration && share(n, ChordLabel::no_chord()) > 0.5 &&
                    std::abs(duration - 5.0) <= 0.1;
    return {ok, "C major tone: longest segment " + dominant.name() + fmt(" %.1fs", longest) + fmt(" of %.1fs", duration) +
                    ", silence: " + fmt("%.0f%% N", 100.0 * share(n, ChordLabel::no_chord()))};
}

}  // namespace

int main() {
    int failed = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& f) {
        Outcome o;
        try {
            o = f();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << "criterion " << id << " [" << name << "]: " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail
                  << std::endl;
    };
    ToyRun toy;
    report(1, "shape conformance", criterion_shapes);
    report(2, "parameter count", criterion_parameters);
    report(3, "gradient correctness", criterion_gradients);
    report(4, "crf exactness", criterion_crf_exactness);
    report(5, "degeneracy law", criterion_degeneracy);
    report(6, "averaging-pull identity", criterion_averaging_pull);
    report(7, "augmentation laws", criterion_augmentation);
    report(8, "wcsr oracle", criterion_wcsr);
    report(9, "synthetic end-to-end", [&] { return criterion_end_to_end(toy); });
    report(10, "analysis pipeline", [&] { return criterion_analysis(toy); });
    {
        Outcome o;
        try {
            o = example_predictions(toy);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << "toy-model prediction examples: " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail << std::endl;
    }
    std::cout << (failed == 0 ? "all checks passed" : std::to_string(failed) + " checks failed") << std::endl;
    if (!toy.root.empty()) std::filesystem::remove_all(toy.root);
    return failed == 0 ? 0 : 1;
}
