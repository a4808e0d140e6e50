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

#include "chordrec/adam.hpp"
#include "chordrec/augmentation.hpp"
#include "chordrec/dataset.hpp"
#include "chordrec/frontend.hpp"
#include "chordrec/network.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace chordrec {

/// Where the 128-map features for the CRF are read from.
enum class FeatureTap {
    Rectified,   ///< after the 128-map layer's batch norm and rectifier (input to the GAP part)
    Normalized,  ///< after the batch norm, before the rectifier
};

std::string to_string(FeatureTap tap);
FeatureTap feature_tap_from_string(const std::string& s);

/// Layer stack: 4 x [conv 32@3x3 same, BN, ReLU], maxpool 2x1, dropout;
/// 2 x [conv 64@3x3 valid, BN, ReLU], maxpool 2x1, dropout;
/// conv 128@12x9 valid, BN, ReLU, dropout; conv 25@1x1 (+bias); GAP; softmax.
std::vector<LayerSpec> table1_layers();

/// Convolutional chord classifier whose penultimate maps serve as CRF features.
class AuditoryModel {
public:
    static constexpr std::size_t kNumFeatures = 128;
    static constexpr std::size_t kNumClasses = 25;

    /// Builds the network for `num_bands` x (2*context+1) inputs.
    static AuditoryModel build(std::uint64_t seed, std::size_t num_bands = 105, std::size_t context = 7);

    explicit AuditoryModel(Network<float> net, std::size_t context, FeatureTap tap = FeatureTap::Rectified);

    Network<float>& network() { return net_; }
    const Network<float>& network() const { return net_; }
    std::size_t context() const { return context_; }
    std::size_t num_bands() const { return net_.input_shape()[1]; }
    FeatureTap feature_tap() const { return tap_; }
    void set_feature_tap(FeatureTap tap);

    /// Class distribution for one window. Throws DataError on a wrong shape.
    std::array<double, kNumClasses> predict_frame(const ContextWindow& x) const;
    /// Averaged 128-map features for one window.
    std::vector<double> extract_features(const ContextWindow& x) const;

    /// Frame-wise class distributions for a whole song, N x 25.
    Eigen::MatrixXd predict_sequence(const Spectrogram& spec) const;
    /// Averaged features for a whole song, 128 x N.
    Eigen::MatrixXd extract_feature_sequence(const Spectrogram& spec) const;
    /// Both of the above from a single pass.
    void analyse_sequence(const Spectrogram& spec, Eigen::MatrixXd* probabilities, Eigen::MatrixXd* features) const;

    /// Weights of the final 1x1 convolution, 25 x 128 (class x feature map).
    Eigen::MatrixXd gap_weights() const;
    Eigen::VectorXd gap_bias() const;

    void save(const std::filesystem::path& path) const;
    /// Throws DataError for unreadable or incompatible checkpoints.
    static AuditoryModel load(const std::filesystem::path& path);

private:
    Tensor<float> window_batch(const Spectrogram& spec, std::size_t begin, std::size_t end) const;
    void check_window(const ContextWindow& x) const;

    Network<float> net_;
    std::size_t context_;
    FeatureTap tap_;
    std::size_t tap_end_ = 0;      // layers [0, tap_end_) produce the tapped maps
    std::size_t gap_part_ = 0;     // first layer of the classification part
};

struct TrainConfig {
    std::size_t batch_size = 512;
    std::size_t patience = 5;
    std::size_t max_epochs = 500;
    double l2 = 1e-7;
    AdamSettings adam{};
    AugmentationPolicy augmentation{};
    std::uint64_t seed = 0;
    /// Stop early once validation accuracy reaches this value (1.0 never stops early).
    double target_validation_accuracy = 1.0;
};

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double validation_accuracy = 0.0;
    double seconds = 0.0;
    bool improved = false;
};

struct TrainLog {
    std::vector<EpochLog> epochs;
    std::size_t best_epoch = 0;
    double best_validation_accuracy = 0.0;
};

/// Frame accuracy of the argmax prediction on un-augmented frames.
double frame_accuracy(const AuditoryModel& model, const FrameDataset& data);

/// Minimizes mean cross-entropy plus l2 * ||theta||_2 with Adam over augmented
/// mini-batches. Stops when validation accuracy has not improved for
/// `patience` epochs and restores the best parameters. Throws DataError for
/// empty training or validation sets and NumericError on a non-finite loss.
TrainLog train_auditory(AuditoryModel& model, const FrameDataset& train, const FrameDataset& validation,
                        const TrainConfig& config, const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace chordrec
