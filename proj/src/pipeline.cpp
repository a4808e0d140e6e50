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


#include "chordrec/pipeline.hpp"

#include "chordrec/analysis.hpp"
#include "chordrec/annotations.hpp"
#include "chordrec/audio.hpp"
#include "chordrec/errors.hpp"
#include "chordrec/serialization.hpp"

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <ostream>
#include <set>
#include <sstream>

namespace chordrec {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string window_name(WindowKind w) { return w == WindowKind::Hann ? "hann" : "rectangular"; }

WindowKind window_from_string(const std::string& s) {
    if (s == "hann") return WindowKind::Hann;
    if (s == "rectangular") return WindowKind::Rectangular;
    throw UsageError("unknown window '" + s + "' (expected hann or rectangular)");
}

class Section {
public:
    Section(const YAML::Node& node, std::string name, std::set<std::string> keys)
        : node_(node), name_(std::move(name)) {
        if (!node_ || node_.IsNull()) return;
        if (!node_.IsMap()) throw UsageError("config section '" + name_ + "' must be a mapping");
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!keys.count(key)) throw UsageError("unknown config key '" + name_ + "." + key + "'");
        }
    }

    template <typename T>
    void read(const char* key, T& dst) const {
        if (!node_ || node_.IsNull() || !node_[key]) return;
        try {
            dst = node_[key].template as<T>();
        } catch (const YAML::Exception&) {
            throw UsageError("config key '" + name_ + "." + key + "' has an invalid value");
        }
    }

private:
    YAML::Node node_;
    std::string name_;
};

std::string frontend_key(const PipelineConfig& c) {
    std::ostringstream s;
    s.precision(17);
    s << c.frame.frame_size << '/' << c.frame.hop_size << '/' << c.frame.sample_rate << '/'
      << window_name(c.frame.window) << '/' << c.filterbank.bands_per_octave << '/' << c.filterbank.fmin << '/'
      << c.filterbank.fmax << '/' << c.filterbank.reference_hz;
    return s.str();
}

Filterbank make_filterbank(const PipelineConfig& c) {
    return build_log_filterbank(c.frame.sample_rate, c.frame.frame_size, c.filterbank);
}

Container song_container(const Spectrogram& spec, const std::vector<ChordLabel>& labels) {
    Container c;
    Tensor<float> s(Shape{spec.num_frames(), spec.num_bands()});
    std::copy(spec.values.data(), spec.values.data() + spec.values.size(), s.data());
    Tensor<std::int32_t> l(Shape{labels.size()});
    for (std::size_t i = 0; i < labels.size(); ++i) l[i] = labels[i].index();
    c.meta["frame_rate"] = spec.frame_rate;
    c.put("spectrogram", std::move(s));
    c.put("labels", std::move(l));
    return c;
}

SongData song_from_container(const Container& c, const ManifestEntry& e) {
    SongData song;
    song.id = e.id;
    song.fold = e.fold;
    const auto& s = c.get_f32("spectrogram");
    const auto& l = c.get_i32("labels");
    if (s.rank() != 2 || l.size() != s.dim(0)) throw DataError("corrupt cache entry for " + e.id);
    song.spectrogram.frame_rate = c.meta.at("frame_rate").get<double>();
    song.spectrogram.values.resize(static_cast<Eigen::Index>(s.dim(0)), static_cast<Eigen::Index>(s.dim(1)));
    std::copy(s.data(), s.data() + s.size(), song.spectrogram.values.data());
    for (std::size_t i = 0; i < l.size(); ++i) song.labels.emplace_back(l[i]);
    return song;
}

std::vector<int> label_indices(const std::vector<ChordLabel>& labels) {
    std::vector<int> out;
    out.reserve(labels.size());
    for (const auto& l : labels) out.push_back(l.index());
    return out;
}

void write_segments(const std::filesystem::path& path, const std::vector<ChordLabel>& labels, double frame_rate) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    write_lab(path, to_annotation_track(segments_from_frames(labels, frame_rate)));
}

}  // namespace

void PipelineConfig::validate() const {
    frame.validate();
    if (!(filterbank.bands_per_octave > 0.0) || !(filterbank.fmin > 0.0) || !(filterbank.fmax > filterbank.fmin))
        throw UsageError("filterbank needs bands_per_octave > 0 and 0 < min_hz < max_hz");
    if (filterbank.fmax > frame.sample_rate / 2) throw UsageError("max_hz exceeds the Nyquist frequency");
    if (cnn.batch_size == 0 || cnn.max_epochs == 0 || cnn.patience == 0)
        throw UsageError("cnn batch_size, max_epochs and patience must be positive");
    if (!(cnn.l2 >= 0.0) || !(cnn.adam.learning_rate > 0.0)) throw UsageError("cnn l2 must be >= 0 and learning_rate > 0");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
        throw UsageError("validation_fraction must lie in (0, 1)");
    if (cnn.augmentation.max_semitones < 0 || cnn.augmentation.max_semitones > 4 ||
        !(cnn.augmentation.max_detune >= 0.0 && cnn.augmentation.max_detune <= 0.4))
        throw UsageError("augmentation allows at most 4 semitones and 0.4 detune");
    if (!(crf.learning_rate > 0.0) || !(crf.l1 >= 0.0) || crf.batch_size == 0 || crf.sequence_length == 0 ||
        crf.patience == 0 || crf.max_epochs == 0)
        throw UsageError("crf settings must be positive (l1 may be zero)");
}

std::string PipelineConfig::to_yaml() const {
    YAML::Emitter e;
    e.SetDoublePrecision(10);
    e << YAML::BeginMap;
    e << YAML::Key << "frontend" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "frame_size" << YAML::Value << frame.frame_size;
    e << YAML::Key << "hop_size" << YAML::Value << frame.hop_size;
    e << YAML::Key << "sample_rate" << YAML::Value << frame.sample_rate;
    e << YAML::Key << "window" << YAML::Value << window_name(frame.window);
    e << YAML::Key << "bands_per_octave" << YAML::Value << filterbank.bands_per_octave;
    e << YAML::Key << "min_hz" << YAML::Value << filterbank.fmin;
    e << YAML::Key << "max_hz" << YAML::Value << filterbank.fmax;
    e << YAML::Key << "reference_hz" << YAML::Value << filterbank.reference_hz;
    e << YAML::Key << "context" << YAML::Value << context;
    e << YAML::EndMap;
    e << YAML::Key << "cnn" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "batch_size" << YAML::Value << cnn.batch_size;
    e << YAML::Key << "max_epochs" << YAML::Value << cnn.max_epochs;
    e << YAML::Key << "patience" << YAML::Value << cnn.patience;
    e << YAML::Key << "l2" << YAML::Value << cnn.l2;
    e << YAML::Key << "learning_rate" << YAML::Value << cnn.adam.learning_rate;
    e << YAML::Key << "beta1" << YAML::Value << cnn.adam.beta1;
    e << YAML::Key << "beta2" << YAML::Value << cnn.adam.beta2;
    e << YAML::Key << "epsilon" << YAML::Value << cnn.adam.epsilon;
    e << YAML::Key << "validation_fraction" << YAML::Value << validation_fraction;
    e << YAML::Key << "feature_tap" << YAML::Value << to_string(feature_tap);
    e << YAML::Key << "target_validation_accuracy" << YAML::Value << cnn.target_validation_accuracy;
    e << YAML::EndMap;
    e << YAML::Key << "augmentation" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "semitone_shift" << YAML::Value << cnn.augmentation.semitone_shift;
    e << YAML::Key << "detune" << YAML::Value << cnn.augmentation.detune;
    e << YAML::Key << "max_semitones" << YAML::Value << cnn.augmentation.max_semitones;
    e << YAML::Key << "max_detune" << YAML::Value << cnn.augmentation.max_detune;
    e << YAML::EndMap;
    e << YAML::Key << "crf" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "learning_rate" << YAML::Value << crf.learning_rate;
    e << YAML::Key << "l1" << YAML::Value << crf.l1;
    e << YAML::Key << "batch_size" << YAML::Value << crf.batch_size;
    e << YAML::Key << "sequence_length" << YAML::Value << crf.sequence_length;
    e << YAML::Key << "patience" << YAML::Value << crf.patience;
    e << YAML::Key << "max_epochs" << YAML::Value << crf.max_epochs;
    e << YAML::EndMap;
    e << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "manifest" << YAML::Value << manifest.string();
    e << YAML::Key << "test_folds" << YAML::Value << YAML::Flow << test_folds;
    e << YAML::Key << "output" << YAML::Value << output.string();
    e << YAML::EndMap;
    e << YAML::Key << "seed" << YAML::Value << seed;
    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

PipelineConfig parse_config(const std::string& yaml_text) {
    PipelineConfig c;
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw UsageError(std::string("config is not valid YAML: ") + e.what());
    }
    if (root.IsNull()) return c;
    if (!root.IsMap()) throw UsageError("config must be a mapping of sections");
    const std::set<std::string> sections{"frontend", "cnn", "augmentation", "crf", "data", "seed"};
    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        if (!sections.count(key)) throw UsageError("unknown config section '" + key + "'");
    }

    Section fe(root["frontend"], "frontend",
               {"frame_size", "hop_size", "sample_rate", "window", "bands_per_octave", "min_hz", "max_hz",
                "reference_hz", "context"});
    fe.read("frame_size", c.frame.frame_size);
    fe.read("hop_size", c.frame.hop_size);
    fe.read("sample_rate", c.frame.sample_rate);
    std::string window = window_name(c.frame.window);
    fe.read("window", window);
    c.frame.window = window_from_string(window);
    fe.read("bands_per_octave", c.filterbank.bands_per_octave);
    fe.read("min_hz", c.filterbank.fmin);
    fe.read("max_hz", c.filterbank.fmax);
    fe.read("reference_hz", c.filterbank.reference_hz);
    fe.read("context", c.context);

    Section cnn(root["cnn"], "cnn",
                {"batch_size", "max_epochs", "patience", "l2", "learning_rate", "beta1", "beta2", "epsilon",
                 "validation_fraction", "feature_tap", "target_validation_accuracy"});
    cnn.read("batch_size", c.cnn.batch_size);
    cnn.read("max_epochs", c.cnn.max_epochs);
    cnn.read("patience", c.cnn.patience);
    cnn.read("l2", c.cnn.l2);
    cnn.read("learning_rate", c.cnn.adam.learning_rate);
    cnn.read("beta1", c.cnn.adam.beta1);
    cnn.read("beta2", c.cnn.adam.beta2);
    cnn.read("epsilon", c.cnn.adam.epsilon);
    cnn.read("validation_fraction", c.validation_fraction);
    std::string tap = to_string(c.feature_tap);
    cnn.read("feature_tap", tap);
    c.feature_tap = feature_tap_from_string(tap);
    cnn.read("target_validation_accuracy", c.cnn.target_validation_accuracy);

    Section aug(root["augmentation"], "augmentation", {"semitone_shift", "detune", "max_semitones", "max_detune"});
    aug.read("semitone_shift", c.cnn.augmentation.semitone_shift);
    aug.read("detune", c.cnn.augmentation.detune);
    aug.read("max_semitones", c.cnn.augmentation.max_semitones);
    aug.read("max_detune", c.cnn.augmentation.max_detune);

    Section crf(root["crf"], "crf", {"learning_rate", "l1", "batch_size", "sequence_length", "patience", "max_epochs"});
    crf.read("learning_rate", c.crf.learning_rate);
    crf.read("l1", c.crf.l1);
    crf.read("batch_size", c.crf.batch_size);
    crf.read("sequence_length", c.crf.sequence_length);
    crf.read("patience", c.crf.patience);
    crf.read("max_epochs", c.crf.max_epochs);

    Section data(root["data"], "data", {"manifest", "test_folds", "output"});
    std::string manifest, output = c.output.string();
    data.read("manifest", manifest);
    data.read("test_folds", c.test_folds);
    data.read("output", output);
    c.manifest = manifest;
    c.output = output;

    if (root["seed"]) {
        try {
            c.seed = root["seed"].as<std::uint64_t>();
        } catch (const YAML::Exception&) {
            throw UsageError("config key 'seed' has an invalid value");
        }
    }
    c.validate();
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw UsageError("cannot open config " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    PipelineConfig c = parse_config(ss.str());
    // Relative data paths in a config file are relative to the file.
    const auto base = path.parent_path();
    if (!c.manifest.empty() && c.manifest.is_relative()) c.manifest = base / c.manifest;
    return c;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

ExtractReport cmd_extract(const PipelineConfig& config, std::ostream& log) {
    if (config.manifest.empty()) throw UsageError("no manifest given");
    config.validate();
    const auto entries = read_manifest(config.manifest);
    const OutputLayout out{config.output};
    std::filesystem::create_directories(out.cache());
    const Filterbank fb = make_filterbank(config);
    const std::string settings = frontend_key(config);

    ExtractReport report;
    for (const auto& e : entries) {
        try {
            if (e.annotation.empty()) throw DataError("no annotation file");
            const std::string audio_bytes = read_file(e.audio);
            const std::string ann_bytes = read_file(e.annotation);
            const std::string hash = hex64(fnv1a(settings, fnv1a(ann_bytes, fnv1a(audio_bytes))));
            const auto path = out.cache() / (e.id + ".spec");
            if (std::filesystem::exists(path)) {
                try {
                    const Container cached = Container::load(path);
                    if (cached.meta.value("hash", "") == hash) {
                        ++report.cached;
                        continue;
                    }
                    log << "cache entry for " << e.id << " is stale, recomputing\n";
                } catch (const DataError&) {
                    log << "cache entry for " << e.id << " is unreadable, recomputing\n";
                }
            }
            const auto* data = reinterpret_cast<const std::uint8_t*>(audio_bytes.data());
            const AudioBuffer audio = decode_wav_bytes({data, audio_bytes.size()}, config.frame.sample_rate);
            const Spectrogram spec = log_filtered_spectrogram(audio, config.frame, fb);
            const auto labels = frames_from_annotations(parse_lab_string(ann_bytes), spec.frame_rate, spec.num_frames());
            Container c = song_container(spec, labels);
            c.meta["kind"] = "song";
            c.meta["id"] = e.id;
            c.meta["hash"] = hash;
            c.save(path);
            ++report.extracted;
        } catch (const DataError& err) {
            report.failures.push_back(e.id + ": " + err.what());
            log << "error: " << e.id << ": " << err.what() << '\n';
        }
    }
    log << "extract: " << report.extracted << " computed, " << report.cached << " cached, " << report.failures.size()
        << " failed\n";
    return report;
}

FrameDataset load_dataset(const PipelineConfig& config, std::ostream& log) {
    const ExtractReport r = cmd_extract(config, log);
    std::set<std::string> failed;
    for (const auto& f : r.failures) failed.insert(f.substr(0, f.find(':')));
    FrameDataset data;
    const OutputLayout out{config.output};
    for (const auto& e : read_manifest(config.manifest)) {
        if (failed.count(e.id)) continue;
        const Container c = Container::load(out.cache() / (e.id + ".spec"));
        data.songs.push_back(song_from_container(c, e));
    }
    return data;
}

FrameDataset select_folds(const FrameDataset& data, const std::vector<int>& folds, bool include) {
    FrameDataset out;
    for (const auto& s : data.songs) {
        const bool in = std::find(folds.begin(), folds.end(), s.fold) != folds.end();
        if (in == include) out.songs.push_back(s);
    }
    return out;
}

TrainReport cmd_train(const PipelineConfig& config, TrainStage stage, std::ostream& log) {
    config.validate();
    const OutputLayout out{config.output};
    if (stage == TrainStage::Crf && !std::filesystem::exists(out.cnn_checkpoint()))
        throw DataError("no CNN checkpoint at " + out.cnn_checkpoint().string() + "; run the cnn stage first");

    const FrameDataset dev = select_folds(load_dataset(config, log), config.test_folds, false);
    if (dev.num_songs() < 2) throw DataError("need at least two training songs outside the test folds");
    const auto [train_idx, val_idx] = split_by_song(dev.num_songs(), config.validation_fraction, config.seed);
    const FrameDataset train = dev.subset(train_idx);
    const FrameDataset val = dev.subset(val_idx);
    std::filesystem::create_directories(out.model());

    TrainReport report;
    for (const auto& s : train.songs) report.train_ids.push_back(s.id);
    for (const auto& s : val.songs) report.validation_ids.push_back(s.id);
    {
        std::ofstream split(out.model() / "split.json");
        split << nlohmann::json{{"train", report.train_ids},
                                {"validation", report.validation_ids},
                                {"test_folds", config.test_folds}}
                     .dump(2)
              << '\n';
    }
    log << "train: " << train.num_songs() << " songs (" << train.num_frames() << " frames), validation: "
        << val.num_songs() << " songs (" << val.num_frames() << " frames)\n";

    const std::size_t bands = train.songs.front().spectrogram.num_bands();
    std::optional<AuditoryModel> model;
    if (stage != TrainStage::Crf) {
        model.emplace(AuditoryModel::build(config.seed, bands, config.context));
        model->set_feature_tap(config.feature_tap);
        TrainConfig tc = config.cnn;
        tc.seed = config.seed;
        std::ofstream jl(out.model() / "cnn_log.jsonl");
        report.cnn = train_auditory(*model, train, val, tc, [&](const EpochLog& e) {
            jl << nlohmann::json{{"epoch", e.epoch},
                                 {"train_loss", e.train_loss},
                                 {"train_accuracy", e.train_accuracy},
                                 {"validation_accuracy", e.validation_accuracy},
                                 {"improved", e.improved},
                                 {"seconds", e.seconds}}
                      .dump()
               << '\n';
            jl.flush();
            char buf[160];
            std::snprintf(buf, sizeof buf, "cnn epoch %3zu  loss %.4f  train acc %.4f  val acc %.4f  %.1fs%s\n",
                          e.epoch, e.train_loss, e.train_accuracy, e.validation_accuracy, e.seconds,
                          e.improved ? "  *" : "");
            log << buf << std::flush;
        });
        model->save(out.cnn_checkpoint());
        log << "cnn: best epoch " << report.cnn.best_epoch << ", validation accuracy "
            << report.cnn.best_validation_accuracy << '\n';
    } else {
        model.emplace(AuditoryModel::load(out.cnn_checkpoint()));
        model->set_feature_tap(config.feature_tap);
    }
    if (stage == TrainStage::Cnn) return report;

    const auto sequences = [&](const FrameDataset& d) {
        std::vector<CrfSequence> seqs;
        for (const auto& s : d.songs) seqs.push_back({model->extract_feature_sequence(s.spectrogram), label_indices(s.labels)});
        return seqs;
    };
    const auto train_seqs = sequences(train);
    const auto val_seqs = sequences(val);
    CrfTrainConfig cc = config.crf;
    cc.seed = config.seed;
    std::ofstream jl(out.model() / "crf_log.jsonl");
    const CrfParams crf = train_crf(train_seqs, val_seqs, cc, &report.crf, [&](const CrfEpochLog& e) {
        jl << nlohmann::json{{"epoch", e.epoch},
                             {"train_objective", e.train_objective},
                             {"validation_accuracy", e.validation_accuracy},
                             {"improved", e.improved}}
                  .dump()
           << '\n';
        jl.flush();
        char buf[128];
        std::snprintf(buf, sizeof buf, "crf epoch %3zu  objective %.4f  val acc %.4f%s\n", e.epoch,
                      e.train_objective, e.validation_accuracy, e.improved ? "  *" : "");
        log << buf << std::flush;
    });
    crf.save(out.crf_checkpoint());
    log << "crf: best epoch " << report.crf.best_epoch << ", validation accuracy "
        << report.crf.best_validation_accuracy << '\n';
    return report;
}

Prediction predict_spectrogram(const AuditoryModel& model, const CrfParams& crf, const Spectrogram& spec) {
    Eigen::MatrixXd probs, feats;
    model.analyse_sequence(spec, &probs, &feats);
    Prediction p;
    p.frame_rate = spec.frame_rate;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        Eigen::Index k = 0;
        probs.row(i).maxCoeff(&k);
        p.argmax.emplace_back(static_cast<int>(k));
    }
    for (int k : viterbi(crf, feats)) p.viterbi.emplace_back(k);
    return p;
}

Prediction cmd_predict(const PipelineConfig& config, const std::filesystem::path& audio_path,
                       const std::filesystem::path& out_lab, bool with_argmax, std::ostream& log) {
    config.validate();
    const OutputLayout out{config.output};
    AuditoryModel model = AuditoryModel::load(out.cnn_checkpoint());
    model.set_feature_tap(config.feature_tap);
    const CrfParams crf = CrfParams::load(out.crf_checkpoint());
    const AudioBuffer audio = decode_audio(audio_path, config.frame.sample_rate);
    const Spectrogram spec = log_filtered_spectrogram(audio, config.frame, make_filterbank(config));
    const Prediction p = predict_spectrogram(model, crf, spec);
    write_segments(out_lab, p.viterbi, p.frame_rate);
    if (with_argmax) {
        auto argmax_path = out_lab;
        argmax_path.replace_extension(".argmax.lab");
        write_segments(argmax_path, p.argmax, p.frame_rate);
    }
    log << "predict: " << audio_path.string() << " -> " << out_lab.string() << " (" << p.viterbi.size()
        << " frames)\n";
    return p;
}

std::vector<std::string> cmd_predict_corpus(const PipelineConfig& config, std::ostream& log) {
    const OutputLayout out{config.output};
    AuditoryModel model = AuditoryModel::load(out.cnn_checkpoint());
    model.set_feature_tap(config.feature_tap);
    const CrfParams crf = CrfParams::load(out.crf_checkpoint());
    FrameDataset data = load_dataset(config, log);
    if (!config.test_folds.empty()) data = select_folds(data, config.test_folds, true);
    std::filesystem::create_directories(out.predictions());
    std::vector<std::string> ids;
    for (const auto& s : data.songs) {
        const Prediction p = predict_spectrogram(model, crf, s.spectrogram);
        write_segments(out.predictions() / (s.id + ".lab"), p.viterbi, p.frame_rate);
        write_segments(out.predictions() / (s.id + ".argmax.lab"), p.argmax, p.frame_rate);
        ids.push_back(s.id);
    }
    log << "predict: " << ids.size() << " songs -> " << out.predictions().string() << '\n';
    return ids;
}

void EvaluationReport::write(std::ostream& out) const {
    for (const auto& s : songs) {
        nlohmann::json j{{"id", s.id}, {"t_a", s.result.t_a}, {"t_c", s.result.t_c}};
        const auto score = s.result.score();
        j["score"] = score ? nlohmann::json(*score) : nlohmann::json(nullptr);
        if (!s.error.empty()) j["error"] = s.error;
        out << j.dump() << '\n';
    }
    out << nlohmann::json{{"corpus", corpus ? nlohmann::json(*corpus) : nlohmann::json(nullptr)}}.dump() << '\n';
}

EvaluationReport cmd_evaluate(const std::filesystem::path& predictions, const std::filesystem::path& annotations) {
    if (!std::filesystem::is_directory(annotations)) throw DataError("not a directory: " + annotations.string());
    if (!std::filesystem::is_directory(predictions)) throw DataError("not a directory: " + predictions.string());
    std::vector<std::string> ids;
    for (const auto& entry : std::filesystem::directory_iterator(annotations)) {
        const auto name = entry.path().filename().string();
        if (entry.path().extension() == ".lab" && name.find(".argmax.") == std::string::npos)
            ids.push_back(entry.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());

    EvaluationReport report;
    std::vector<WcsrResult> ok;
    for (const auto& id : ids) {
        SongScore s;
        s.id = id;
        try {
            const auto ann = reduce_annotations(parse_lab(annotations / (id + ".lab")));
            const auto pred_path = predictions / (id + ".lab");
            if (!std::filesystem::exists(pred_path)) throw DataError("missing prediction " + pred_path.string());
            LabelSegments pred;
            for (const auto& seg : parse_lab(pred_path).segments)
                pred.segments.push_back({seg.start, seg.end, reduce_label(seg.raw_label)});
            s.result = wcsr(pred, ann);
            ok.push_back(s.result);
        } catch (const DataError& e) {
            s.error = e.what();
        }
        report.songs.push_back(std::move(s));
    }
    double ta = 0.0;
    for (const auto& r : ok) ta += r.t_a;
    if (ta > 0.0) report.corpus = corpus_wcsr(ok);
    return report;
}

std::vector<std::filesystem::path> cmd_analyze(const PipelineConfig& config, const std::filesystem::path& out_dir) {
    const OutputLayout out{config.output};
    if (!std::filesystem::exists(out.cnn_checkpoint()))
        throw DataError("no CNN checkpoint at " + out.cnn_checkpoint().string());
    return emit_analysis_plots(out.cnn_checkpoint(), out_dir).files;
}

}  // namespace chordrec
