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


#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

namespace chordrec {

/// Linear-chain CRF over K labels with D-dimensional frame features.
///
/// For features x_0..x_{N-1} (columns of a D x N matrix) and labels y,
///   energy = sum_n (bias[y_n] + x_n . observation[:, y_n])
///          + sum_{n>=1} transitions(y_{n-1}, y_n) + initial[y_0] + final[y_{N-1}]
/// and p(y | x) = exp(energy) / Z.
struct CrfParams {
    Eigen::MatrixXd transitions;  ///< K x K, row = previous label
    Eigen::MatrixXd observation;  ///< D x K
    Eigen::VectorXd bias;         ///< K
    Eigen::VectorXd initial;      ///< K
    Eigen::VectorXd final;        ///< K

    static CrfParams zeros(std::size_t num_classes = 25, std::size_t num_features = 128);
    /// Observation weights and bias from a K x D classifier, zero transitions and
    /// boundaries: decoding then reduces to frame-wise logistic regression.
    static CrfParams from_classifier(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias);

    std::size_t num_classes() const { return static_cast<std::size_t>(bias.size()); }
    std::size_t num_features() const { return static_cast<std::size_t>(observation.rows()); }
    /// Throws DataError on inconsistent shapes or non-finite values.
    void validate() const;

    double l1_norm() const;
    std::size_t parameter_count() const;

    void save(const std::filesystem::path& path) const;
    static CrfParams load(const std::filesystem::path& path);
};

/// Per-frame label scores, N x K: bias + x_n . observation.
Eigen::MatrixXd unary_potentials(const CrfParams& params, const Eigen::MatrixXd& features);

double energy(const CrfParams& params, const Eigen::MatrixXd& features, const std::vector<int>& labels);

double log_partition(const CrfParams& params, const Eigen::MatrixXd& features);

/// log p(labels | features).
double sequence_log_likelihood(const CrfParams& params, const Eigen::MatrixXd& features,
                               const std::vector<int>& labels);

struct Marginals {
    Eigen::MatrixXd unary;     ///< N x K, p(y_n = k)
    Eigen::MatrixXd pairwise;  ///< K x K, sum over n >= 1 of p(y_{n-1} = i, y_n = j)
    double log_z = 0.0;
};

Marginals forward_backward(const CrfParams& params, const Eigen::MatrixXd& features);

/// Highest-energy label sequence. Among equal-energy optima the one with the
/// lowest label at the earliest differing frame is returned.
std::vector<int> viterbi(const CrfParams& params, const Eigen::MatrixXd& features);

/// Negative log-likelihood of one sequence; adds its gradient to `grad` when given.
double nll_and_gradient(const CrfParams& params, const Eigen::MatrixXd& features, const std::vector<int>& labels,
                        CrfParams* grad);

struct CrfSequence {
    Eigen::MatrixXd features;  ///< D x N
    std::vector<int> labels;   ///< N
};

struct CrfTrainConfig {
    double learning_rate = 0.01;
    double l1 = 1e-4;
    std::size_t batch_size = 32;
    std::size_t sequence_length = 1024;
    std::size_t patience = 5;
    std::size_t max_epochs = 200;
    std::uint64_t seed = 0;
};

struct CrfEpochLog {
    std::size_t epoch = 0;
    double train_objective = 0.0;  ///< mean NLL per subsequence plus the L1 term, averaged over batches
    double validation_accuracy = 0.0;
    bool improved = false;
};

struct CrfTrainLog {
    std::vector<CrfEpochLog> epochs;
    std::size_t best_epoch = 0;
    double best_validation_accuracy = 0.0;
};

/// Frame accuracy of Viterbi decoding.
double viterbi_accuracy(const CrfParams& params, const std::vector<CrfSequence>& data);

/// Trains from zero initialisation with Adam on shuffled mini-batches of
/// subsequences (songs cut into non-overlapping windows of `sequence_length`
/// frames; the last window of a song is shorter). The objective per batch is the
/// mean NLL over its subsequences plus l1 * ||theta||_1. Early stopping on
/// validation frame accuracy; the best parameters are returned.
CrfParams train_crf(const std::vector<CrfSequence>& train, const std::vector<CrfSequence>& validation,
                    const CrfTrainConfig& config, CrfTrainLog* log = nullptr,
                    const std::function<void(const CrfEpochLog&)>& on_epoch = {});

}  // namespace chordrec
