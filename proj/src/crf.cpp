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

#include "chordrec/adam.hpp"
#include "chordrec/errors.hpp"
#include "chordrec/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>

namespace chordrec {

namespace {

double logsumexp(const double* v, Eigen::Index n, Eigen::Index stride = 1) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) m = std::max(m, v[i * stride]);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += std::exp(v[i * stride] - m);
    return m + std::log(s);
}

void check_inputs(const CrfParams& p, const Eigen::MatrixXd& x) {
    if (x.cols() == 0) throw DataError("crf: empty sequence");
    if (static_cast<std::size_t>(x.rows()) != p.num_features())
        throw DataError("crf: features have dimension " + std::to_string(x.rows()) + ", model expects " +
                        std::to_string(p.num_features()));
}

void check_labels(const CrfParams& p, const Eigen::MatrixXd& x, const std::vector<int>& y) {
    if (y.size() != static_cast<std::size_t>(x.cols())) throw DataError("crf: label count differs from frame count");
    for (int k : y)
        if (k < 0 || static_cast<std::size_t>(k) >= p.num_classes())
            throw DataError("crf: label " + std::to_string(k) + " out of range");
}

// Row-major N x K forward messages.
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMat forward_messages(const CrfParams& p, const RowMat& u) {
    const Eigen::Index n = u.rows(), k = u.cols();
    RowMat alpha(n, k);
    alpha.row(0) = p.initial.transpose() + u.row(0);
    std::vector<double> tmp(static_cast<std::size_t>(k));
    for (Eigen::Index t = 1; t < n; ++t) {
        for (Eigen::Index j = 0; j < k; ++j) {
            for (Eigen::Index i = 0; i < k; ++i) tmp[static_cast<std::size_t>(i)] = alpha(t - 1, i) + p.transitions(i, j);
            alpha(t, j) = u(t, j) + logsumexp(tmp.data(), k);
        }
    }
    return alpha;
}

std::vector<std::span<double>> spans(CrfParams& p) {
    return {{p.transitions.data(), static_cast<std::size_t>(p.transitions.size())},
            {p.observation.data(), static_cast<std::size_t>(p.observation.size())},
            {p.bias.data(), static_cast<std::size_t>(p.bias.size())},
            {p.initial.data(), static_cast<std::size_t>(p.initial.size())},
            {p.final.data(), static_cast<std::size_t>(p.final.size())}};
}

Tensor<double> to_tensor(const Eigen::MatrixXd& m) {
    Tensor<double> t(Shape{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) t[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
    return t;
}

Eigen::MatrixXd from_tensor(const Tensor<double>& t, std::size_t rows, std::size_t cols, const std::string& name) {
    if (t.shape() != Shape{rows, cols})
        throw DataError("crf tensor " + name + " has shape " + shape_string(t.shape()) + ", expected " +
                        shape_string(Shape{rows, cols}));
    Eigen::MatrixXd m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t[i * cols + j];
    return m;
}

}  // namespace

CrfParams CrfParams::zeros(std::size_t num_classes, std::size_t num_features) {
    const auto k = static_cast<Eigen::Index>(num_classes);
    const auto d = static_cast<Eigen::Index>(num_features);
    return {Eigen::MatrixXd::Zero(k, k), Eigen::MatrixXd::Zero(d, k), Eigen::VectorXd::Zero(k),
            Eigen::VectorXd::Zero(k), Eigen::VectorXd::Zero(k)};
}

CrfParams CrfParams::from_classifier(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias) {
    if (weights.rows() != bias.size()) throw DataError("crf: classifier weights and bias disagree");
    CrfParams p = zeros(static_cast<std::size_t>(weights.rows()), static_cast<std::size_t>(weights.cols()));
    p.observation = weights.transpose();
    p.bias = bias;
    return p;
}

void CrfParams::validate() const {
    const Eigen::Index k = bias.size();
    if (k == 0) throw DataError("crf: no classes");
    if (transitions.rows() != k || transitions.cols() != k || observation.cols() != k || initial.size() != k ||
        final.size() != k)
        throw DataError("crf: inconsistent parameter shapes");
    if (!transitions.allFinite() || !observation.allFinite() || !bias.allFinite() || !initial.allFinite() ||
        !final.allFinite())
        throw DataError("crf: non-finite parameters");
}

double CrfParams::l1_norm() const {
    return transitions.cwiseAbs().sum() + observation.cwiseAbs().sum() + bias.cwiseAbs().sum() +
           initial.cwiseAbs().sum() + final.cwiseAbs().sum();
}

std::size_t CrfParams::parameter_count() const {
    return static_cast<std::size_t>(transitions.size() + observation.size() + bias.size() + initial.size() +
                                    final.size());
}

void CrfParams::save(const std::filesystem::path& path) const {
    validate();
    Container c;
    c.meta["kind"] = "crf";
    c.meta["num_classes"] = num_classes();
    c.meta["num_features"] = num_features();
    c.put("transitions", to_tensor(transitions));
    c.put("observation", to_tensor(observation));
    c.put("bias", to_tensor(bias));
    c.put("initial", to_tensor(initial));
    c.put("final", to_tensor(final));
    c.save(path);
}

CrfParams CrfParams::load(const std::filesystem::path& path) {
    const Container c = Container::load(path);
    try {
        if (c.meta.value("kind", "") != "crf") throw DataError(path.string() + " is not a CRF checkpoint");
        const auto k = c.meta.at("num_classes").get<std::size_t>();
        const auto d = c.meta.at("num_features").get<std::size_t>();
        CrfParams p;
        p.transitions = from_tensor(c.get_f64("transitions"), k, k, "transitions");
        p.observation = from_tensor(c.get_f64("observation"), d, k, "observation");
        p.bias = from_tensor(c.get_f64("bias"), k, 1, "bias");
        p.initial = from_tensor(c.get_f64("initial"), k, 1, "initial");
        p.final = from_tensor(c.get_f64("final"), k, 1, "final");
        p.validate();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": bad CRF metadata: " + e.what());
    }
}

Eigen::MatrixXd unary_potentials(const CrfParams& params, const Eigen::MatrixXd& features) {
    check_inputs(params, features);
    Eigen::MatrixXd u = features.transpose() * params.observation;
    u.rowwise() += params.bias.transpose();
    return u;
}

double energy(const CrfParams& params, const Eigen::MatrixXd& features, const std::vector<int>& labels) {
    check_inputs(params, features);
    check_labels(params, features, labels);
    double e = params.initial(labels.front()) + params.final(labels.back());
    for (std::size_t n = 0; n < labels.size(); ++n) {
        const auto t = static_cast<Eigen::Index>(n);
        e += params.bias(labels[n]) + features.col(t).dot(params.observation.col(labels[n]));
        if (n > 0) e += params.transitions(labels[n - 1], labels[n]);
    }
    return e;
}

double log_partition(const CrfParams& params, const Eigen::MatrixXd& features) {
    const RowMat u = unary_potentials(params, features);
    const RowMat alpha = forward_messages(params, u);
    const Eigen::RowVectorXd last = alpha.row(alpha.rows() - 1) + params.final.transpose();
    return logsumexp(last.data(), last.size());
}

double sequence_log_likelihood(const CrfParams& params, const Eigen::MatrixXd& features,
                               const std::vector<int>& labels) {
    return energy(params, features, labels) - log_partition(params, features);
}

Marginals forward_backward(const CrfParams& params, const Eigen::MatrixXd& features) {
    const RowMat u = unary_potentials(params, features);
    const Eigen::Index n = u.rows(), k = u.cols();
    const RowMat alpha = forward_messages(params, u);

    RowMat beta(n, k);
    beta.row(n - 1) = params.final.transpose();
    std::vector<double> tmp(static_cast<std::size_t>(k));
    for (Eigen::Index t = n - 2; t >= 0; --t) {
        for (Eigen::Index i = 0; i < k; ++i) {
            for (Eigen::Index j = 0; j < k; ++j)
                tmp[static_cast<std::size_t>(j)] = params.transitions(i, j) + u(t + 1, j) + beta(t + 1, j);
            beta(t, i) = logsumexp(tmp.data(), k);
        }
    }

    Marginals m;
    const Eigen::RowVectorXd last = alpha.row(n - 1) + params.final.transpose();
    m.log_z = logsumexp(last.data(), last.size());
    m.unary = ((alpha + beta).array() - m.log_z).exp().matrix();
    m.pairwise = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index t = 1; t < n; ++t)
        for (Eigen::Index i = 0; i < k; ++i)
            for (Eigen::Index j = 0; j < k; ++j)
                m.pairwise(i, j) +=
                    std::exp(alpha(t - 1, i) + params.transitions(i, j) + u(t, j) + beta(t, j) - m.log_z);
    return m;
}

std::vector<int> viterbi(const CrfParams& params, const Eigen::MatrixXd& features) {
    const RowMat u = unary_potentials(params, features);
    const Eigen::Index n = u.rows(), k = u.cols();
    // suffix(t, j): best score of frames t+1.. given y_t = j, including the final potential.
    RowMat suffix(n, k);
    suffix.row(n - 1) = params.final.transpose();
    for (Eigen::Index t = n - 1; t > 0; --t) {
        for (Eigen::Index i = 0; i < k; ++i) {
            double best = -std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < k; ++j)
                best = std::max(best, params.transitions(i, j) + u(t, j) + suffix(t, j));
            suffix(t - 1, i) = best;
        }
    }
    // Walking forward and taking the lowest index that still reaches the
    // optimum yields the lexicographically smallest optimal path.
    std::vector<int> path(static_cast<std::size_t>(n));
    auto pick = [&](Eigen::Index t, auto&& entry) {
        Eigen::Index best = 0;
        double best_v = entry(0) + u(t, 0) + suffix(t, 0);
        for (Eigen::Index j = 1; j < k; ++j) {
            const double v = entry(j) + u(t, j) + suffix(t, j);
            if (v > best_v) {
                best_v = v;
                best = j;
            }
        }
        return static_cast<int>(best);
    };
    path[0] = pick(0, [&](Eigen::Index j) { return params.initial(j); });
    for (Eigen::Index t = 1; t < n; ++t) {
        const int prev = path[static_cast<std::size_t>(t - 1)];
        path[static_cast<std::size_t>(t)] = pick(t, [&](Eigen::Index j) { return params.transitions(prev, j); });
    }
    return path;
}

double nll_and_gradient(const CrfParams& params, const Eigen::MatrixXd& features, const std::vector<int>& labels,
                        CrfParams* grad) {
    check_inputs(params, features);
    check_labels(params, features, labels);
    const Marginals m = forward_backward(params, features);
    const double nll = m.log_z - energy(params, features, labels);
    if (!grad) return nll;

    // d NLL = expected sufficient statistics - observed ones
    Eigen::MatrixXd diff = m.unary;  // N x K
    for (std::size_t t = 0; t < labels.size(); ++t) diff(static_cast<Eigen::Index>(t), labels[t]) -= 1.0;
    grad->observation.noalias() += features * diff;
    grad->bias += diff.colwise().sum().transpose();
    grad->transitions += m.pairwise;
    for (std::size_t t = 1; t < labels.size(); ++t) grad->transitions(labels[t - 1], labels[t]) -= 1.0;
    grad->initial += m.unary.row(0).transpose();
    grad->initial(labels.front()) -= 1.0;
    grad->final += m.unary.row(m.unary.rows() - 1).transpose();
    grad->final(labels.back()) -= 1.0;
    return nll;
}

double viterbi_accuracy(const CrfParams& params, const std::vector<CrfSequence>& data) {
    std::size_t correct = 0, total = 0;
    for (const auto& s : data) {
        const auto path = viterbi(params, s.features);
        for (std::size_t t = 0; t < path.size(); ++t) correct += path[t] == s.labels[t];
        total += path.size();
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

CrfParams train_crf(const std::vector<CrfSequence>& train, const std::vector<CrfSequence>& validation,
                    const CrfTrainConfig& config, CrfTrainLog* log,
                    const std::function<void(const CrfEpochLog&)>& on_epoch) {
    if (train.empty()) throw DataError("crf: training set is empty");
    if (validation.empty()) throw DataError("crf: validation set is empty");
    if (config.batch_size == 0 || config.sequence_length == 0)
        throw UsageError("crf: batch size and sequence length must be positive");
    const auto d = static_cast<std::size_t>(train.front().features.rows());
    for (const auto* set : {&train, &validation})
        for (const auto& s : *set) {
            if (static_cast<std::size_t>(s.features.rows()) != d) throw DataError("crf: feature dimensions differ");
            if (s.labels.size() != static_cast<std::size_t>(s.features.cols()))
                throw DataError("crf: label count differs from frame count");
        }

    CrfParams params = CrfParams::zeros(25, d);
    CrfParams best = params;
    double best_acc = -1.0;
    std::size_t since_best = 0;
    CrfTrainLog local;
    CrfTrainLog& out = log ? *log : local;
    out = {};

    AdamSettings settings;
    settings.learning_rate = config.learning_rate;
    Adam<double> adam(settings);
    std::mt19937_64 rng(config.seed);

    struct Chunk {
        std::size_t seq, begin, length;
    };

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::vector<Chunk> chunks;
        for (std::size_t s = 0; s < train.size(); ++s) {
            const std::size_t n = train[s].labels.size();
            for (std::size_t begin = 0; begin < n; begin += config.sequence_length)
                chunks.push_back({s, begin, std::min(config.sequence_length, n - begin)});
        }
        std::shuffle(chunks.begin(), chunks.end(), rng);

        double objective_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t b0 = 0; b0 < chunks.size(); b0 += config.batch_size) {
            const std::size_t b1 = std::min(chunks.size(), b0 + config.batch_size);
            CrfParams grad = CrfParams::zeros(25, d);
            double nll = 0.0;
            for (std::size_t c = b0; c < b1; ++c) {
                const auto& ch = chunks[c];
                const auto& seq = train[ch.seq];
                const Eigen::MatrixXd x = seq.features.middleCols(static_cast<Eigen::Index>(ch.begin),
                                                                  static_cast<Eigen::Index>(ch.length));
                const std::vector<int> y(seq.labels.begin() + static_cast<std::ptrdiff_t>(ch.begin),
                                         seq.labels.begin() + static_cast<std::ptrdiff_t>(ch.begin + ch.length));
                nll += nll_and_gradient(params, x, y, &grad);
            }
            const double scale = 1.0 / static_cast<double>(b1 - b0);
            auto gs = spans(grad);
            auto ps = spans(params);
            std::vector<std::span<const double>> gv;
            for (std::size_t i = 0; i < gs.size(); ++i) {
                for (std::size_t j = 0; j < gs[i].size(); ++j) {
                    const double th = ps[i][j];
                    gs[i][j] = gs[i][j] * scale + config.l1 * static_cast<double>((th > 0.0) - (th < 0.0));
                }
                gv.emplace_back(gs[i].data(), gs[i].size());
            }
            const double objective = nll * scale + config.l1 * params.l1_norm();
            if (!std::isfinite(objective)) throw NumericError("crf: non-finite objective at epoch " + std::to_string(epoch));
            adam.step(ps, gv);
            objective_sum += objective;
            ++batches;
        }

        CrfEpochLog e;
        e.epoch = epoch;
        e.train_objective = objective_sum / static_cast<double>(batches);
        e.validation_accuracy = viterbi_accuracy(params, validation);
        e.improved = e.validation_accuracy > best_acc;
        if (e.improved) {
            best_acc = e.validation_accuracy;
            best = params;
            out.best_epoch = epoch;
            since_best = 0;
        } else {
            ++since_best;
        }
        out.epochs.push_back(e);
        if (on_epoch) on_epoch(e);
        if (since_best >= config.patience) break;
    }
    out.best_validation_accuracy = best_acc;
    return best;
}

}  // namespace chordrec
