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


#include "chordrec/auditory_model.hpp"

#include "chordrec/errors.hpp"
#include "chordrec/serialization.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace chordrec {

namespace {

constexpr std::size_t kInferenceChunk = 256;

std::size_t argmax(std::span<const float> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

std::string to_string(FeatureTap tap) { return tap == FeatureTap::Rectified ? "rectified" : "normalized"; }

FeatureTap feature_tap_from_string(const std::string& s) {
    if (s == "rectified") return FeatureTap::Rectified;
    if (s == "normalized") return FeatureTap::Normalized;
    throw UsageError("unknown feature tap '" + s + "' (expected rectified or normalized)");
}

std::vector<LayerSpec> table1_layers() {
    std::vector<LayerSpec> l;
    for (int i = 1; i <= 4; ++i) {
        const auto n = std::to_string(i);
        l.push_back(LayerSpec::conv("conv" + n, 32, 3, 3, Padding::Same));
        l.push_back(LayerSpec::batchnorm("bn" + n));
        l.push_back(LayerSpec::rectify("relu" + n));
    }
    l.push_back(LayerSpec::maxpool("pool1", 2, 1));
    l.push_back(LayerSpec::dropout("drop1", 0.5));
    for (int i = 5; i <= 6; ++i) {
        const auto n = std::to_string(i);
        l.push_back(LayerSpec::conv("conv" + n, 64, 3, 3, Padding::Valid));
        l.push_back(LayerSpec::batchnorm("bn" + n));
        l.push_back(LayerSpec::rectify("relu" + n));
    }
    l.push_back(LayerSpec::maxpool("pool2", 2, 1));
    l.push_back(LayerSpec::dropout("drop2", 0.5));
    l.push_back(LayerSpec::conv("conv7", 128, 12, 9, Padding::Valid));
    l.push_back(LayerSpec::batchnorm("bn7"));
    l.push_back(LayerSpec::rectify("relu7"));
    l.push_back(LayerSpec::dropout("drop3", 0.5));
    l.push_back(LayerSpec::conv("conv8", 25, 1, 1, Padding::Valid, true));
    l.push_back(LayerSpec::avgpool("gap"));
    l.push_back(LayerSpec::softmax("softmax"));
    return l;
}

AuditoryModel AuditoryModel::build(std::uint64_t seed, std::size_t num_bands, std::size_t context) {
    Network<float> net(Shape{1, num_bands, 2 * context + 1}, table1_layers(), seed);
    return AuditoryModel(std::move(net), context);
}

AuditoryModel::AuditoryModel(Network<float> net, std::size_t context, FeatureTap tap)
    : net_(std::move(net)), context_(context), tap_(tap) {
    if (net_.input_shape().size() != 3 || net_.input_shape()[2] != 2 * context + 1)
        throw UsageError("network input does not match the context size");
    gap_part_ = net_.layer_index("conv8");
    set_feature_tap(tap);
}

void AuditoryModel::set_feature_tap(FeatureTap tap) {
    tap_ = tap;
    tap_end_ = net_.layer_index(tap == FeatureTap::Rectified ? "relu7" : "bn7") + 1;
}

void AuditoryModel::check_window(const ContextWindow& x) const {
    if (static_cast<std::size_t>(x.values.rows()) != num_bands() ||
        static_cast<std::size_t>(x.values.cols()) != 2 * context_ + 1)
        throw DataError("context window is " + std::to_string(x.values.rows()) + "x" +
                        std::to_string(x.values.cols()) + ", model expects " + std::to_string(num_bands()) + "x" +
                        std::to_string(2 * context_ + 1));
}

std::array<double, AuditoryModel::kNumClasses> AuditoryModel::predict_frame(const ContextWindow& x) const {
    check_window(x);
    Tensor<float> in(Shape{1, 1, num_bands(), 2 * context_ + 1});
    std::copy(x.values.data(), x.values.data() + x.values.size(), in.data());
    const Tensor<float> p = net_.infer(in);
    std::array<double, kNumClasses> out{};
    for (std::size_t k = 0; k < kNumClasses; ++k) out[k] = p[k];
    return out;
}

std::vector<double> AuditoryModel::extract_features(const ContextWindow& x) const {
    check_window(x);
    Tensor<float> in(Shape{1, 1, num_bands(), 2 * context_ + 1});
    std::copy(x.values.data(), x.values.data() + x.values.size(), in.data());
    const Tensor<float> maps = net_.infer(in, tap_end_);
    const std::size_t per_map = maps.size() / kNumFeatures;
    std::vector<double> f(kNumFeatures, 0.0);
    for (std::size_t c = 0; c < kNumFeatures; ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < per_map; ++i) s += maps[c * per_map + i];
        f[c] = s / static_cast<double>(per_map);
    }
    return f;
}

Tensor<float> AuditoryModel::window_batch(const Spectrogram& spec, std::size_t begin, std::size_t end) const {
    const std::size_t bands = num_bands();
    const std::size_t width = 2 * context_ + 1;
    const auto n = static_cast<std::ptrdiff_t>(spec.num_frames());
    Tensor<float> out(Shape{end - begin, 1, bands, width});
    for (std::size_t b = begin; b < end; ++b) {
        float* dst = out.item(b - begin).data();
        for (std::size_t c = 0; c < width; ++c) {
            auto src = static_cast<std::ptrdiff_t>(b) + static_cast<std::ptrdiff_t>(c) -
                       static_cast<std::ptrdiff_t>(context_);
            src = std::clamp<std::ptrdiff_t>(src, 0, n - 1);
            for (std::size_t r = 0; r < bands; ++r)
                dst[r * width + c] = spec.values(src, static_cast<Eigen::Index>(r));
        }
    }
    return out;
}

void AuditoryModel::analyse_sequence(const Spectrogram& spec, Eigen::MatrixXd* probabilities,
                                     Eigen::MatrixXd* features) const {
    if (spec.num_bands() != num_bands())
        throw DataError("spectrogram has " + std::to_string(spec.num_bands()) + " bands, model expects " +
                        std::to_string(num_bands()));
    const std::size_t n = spec.num_frames();
    if (probabilities) probabilities->resize(static_cast<Eigen::Index>(n), kNumClasses);
    if (features) features->resize(kNumFeatures, static_cast<Eigen::Index>(n));
    for (std::size_t begin = 0; begin < n; begin += kInferenceChunk) {
        const std::size_t end = std::min(n, begin + kInferenceChunk);
        const Tensor<float> maps = net_.infer(window_batch(spec, begin, end), tap_end_);
        if (features) {
            const std::size_t per_map = maps.size() / ((end - begin) * kNumFeatures);
            for (std::size_t b = begin; b < end; ++b) {
                const auto item = maps.item(b - begin);
                for (std::size_t c = 0; c < kNumFeatures; ++c) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < per_map; ++i) s += item[c * per_map + i];
                    (*features)(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(b)) =
                        s / static_cast<double>(per_map);
                }
            }
        }
        if (probabilities) {
            const Tensor<float> p = net_.infer_range(maps, tap_end_, net_.num_layers());
            for (std::size_t b = begin; b < end; ++b)
                for (std::size_t k = 0; k < kNumClasses; ++k)
                    (*probabilities)(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k)) =
                        p[(b - begin) * kNumClasses + k];
        }
    }
}

Eigen::MatrixXd AuditoryModel::predict_sequence(const Spectrogram& spec) const {
    Eigen::MatrixXd p;
    analyse_sequence(spec, &p, nullptr);
    return p;
}

Eigen::MatrixXd AuditoryModel::extract_feature_sequence(const Spectrogram& spec) const {
    Eigen::MatrixXd f;
    analyse_sequence(spec, nullptr, &f);
    return f;
}

Eigen::MatrixXd AuditoryModel::gap_weights() const {
    const Tensor<float>& k = net_.tensor("conv8.kernels");  // [25, 128, 1, 1]
    Eigen::MatrixXd w(kNumClasses, kNumFeatures);
    for (std::size_t i = 0; i < kNumClasses; ++i)
        for (std::size_t j = 0; j < kNumFeatures; ++j)
            w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = k[i * kNumFeatures + j];
    return w;
}

Eigen::VectorXd AuditoryModel::gap_bias() const {
    const Tensor<float>& b = net_.tensor("conv8.bias");
    Eigen::VectorXd v(kNumClasses);
    for (std::size_t i = 0; i < kNumClasses; ++i) v(static_cast<Eigen::Index>(i)) = b[i];
    return v;
}

void AuditoryModel::save(const std::filesystem::path& path) const {
    Container c;
    c.meta["kind"] = "auditory-model";
    c.meta["num_bands"] = num_bands();
    c.meta["context"] = context_;
    c.meta["feature_tap"] = to_string(tap_);
    for (auto& [name, t] : net_.state()) c.put(name, t);
    c.save(path);
}

AuditoryModel AuditoryModel::load(const std::filesystem::path& path) {
    const Container c = Container::load(path);
    try {
        if (c.meta.value("kind", "") != "auditory-model")
            throw DataError(path.string() + " is not an auditory model checkpoint");
        auto model = build(0, c.meta.at("num_bands").get<std::size_t>(), c.meta.at("context").get<std::size_t>());
        model.set_feature_tap(feature_tap_from_string(c.meta.value("feature_tap", "rectified")));
        NamedTensors<float> state = model.net_.state();
        for (auto& [name, t] : state) {
            if (!c.contains(name)) throw DataError(path.string() + ": missing tensor " + name);
            const Tensor<float>& stored = c.get_f32(name);
            if (stored.shape() != t.shape())
                throw DataError(path.string() + ": tensor " + name + " has shape " + shape_string(stored.shape()) +
                                ", expected " + shape_string(t.shape()));
            t = stored;
        }
        model.net_.load_state(state);
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": bad checkpoint metadata: " + e.what());
    } catch (const UsageError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

double frame_accuracy(const AuditoryModel& model, const FrameDataset& data) {
    std::size_t correct = 0, total = 0;
    for (const auto& song : data.songs) {
        const Eigen::MatrixXd p = model.predict_sequence(song.spectrogram);
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            Eigen::Index k = 0;
            p.row(i).maxCoeff(&k);
            correct += static_cast<int>(k) == song.labels[static_cast<std::size_t>(i)].index();
        }
        total += static_cast<std::size_t>(p.rows());
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

TrainLog train_auditory(AuditoryModel& model, const FrameDataset& train, const FrameDataset& validation,
                        const TrainConfig& config, const std::function<void(const EpochLog&)>& on_epoch) {
    if (train.num_frames() == 0) throw DataError("training set is empty");
    if (validation.num_frames() == 0) throw DataError("validation set is empty");
    train.validate();
    validation.validate();

    Network<float>& net = model.network();
    const std::size_t logits_end = net.num_layers() - 1;  // everything before the softmax
    Adam<float> adam(config.adam);
    MinibatchStream stream(train, config.batch_size, config.augmentation, config.seed, model.context());

    TrainLog log;
    NamedTensors<float> best = net.state();
    double best_acc = -1.0;
    std::size_t since_best = 0;
    Minibatch mb;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        stream.start_epoch();
        double loss_sum = 0.0;
        std::size_t seen = 0, correct = 0;
        while (stream.next(mb)) {
            net.zero_grad();
            const Tensor<float> p = net.forward(mb.inputs, Mode::Train);
            auto params = net.parameters();
            std::vector<const Tensor<float>*> values;
            std::vector<Tensor<float>*> grads;
            for (auto& pr : params) {
                values.push_back(pr.value);
                grads.push_back(pr.grad);
            }
            const double loss = cross_entropy_l2_loss<float>(p, mb.targets, values, config.l2);
            if (!std::isfinite(loss)) throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
            net.backward(cross_entropy_softmax_grad(p, mb.targets), logits_end, false);
            add_l2_norm_gradient<float>(values, grads, config.l2);

            std::vector<std::span<float>> pv;
            std::vector<std::span<const float>> gv;
            for (auto& pr : params) {
                pv.push_back(pr.value->span());
                gv.push_back(std::as_const(*pr.grad).span());
            }
            adam.step(pv, gv);

            const std::size_t b = mb.labels.size();
            loss_sum += loss * static_cast<double>(b);
            seen += b;
            for (std::size_t i = 0; i < b; ++i)
                correct += static_cast<int>(argmax(p.item(i))) == mb.labels[i];
        }

        EpochLog e;
        e.epoch = epoch;
        e.train_loss = loss_sum / static_cast<double>(seen);
        e.train_accuracy = static_cast<double>(correct) / static_cast<double>(seen);
        e.validation_accuracy = frame_accuracy(model, validation);
        e.improved = e.validation_accuracy > best_acc;
        e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (e.improved) {
            best_acc = e.validation_accuracy;
            best = net.state();
            log.best_epoch = epoch;
            since_best = 0;
        } else {
            ++since_best;
        }
        log.epochs.push_back(e);
        if (on_epoch) on_epoch(e);
        if (since_best >= config.patience || best_acc >= config.target_validation_accuracy) break;
    }
    net.load_state(best);
    log.best_validation_accuracy = best_acc;
    return log;
}

}  // namespace chordrec
