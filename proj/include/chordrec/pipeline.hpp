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

#include "chordrec/auditory_model.hpp"
#include "chordrec/crf.hpp"
#include "chordrec/dataset.hpp"
#include "chordrec/evaluation.hpp"
#include "chordrec/frontend.hpp"
#include "chordrec/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace chordrec {

/// Every tunable of the pipeline. Defaults are the published settings, so an
/// empty config file reproduces them.
///
/// Config files are YAML with the sections below; unknown keys are rejected.
///
///   frontend:     frame_size, hop_size, sample_rate, window (hann|rectangular),
///                 bands_per_octave, min_hz, max_hz, reference_hz, context
///   cnn:          batch_size, max_epochs, patience, l2, learning_rate, beta1,
///                 beta2, epsilon, validation_fraction, feature_tap
///                 (rectified|normalized), target_validation_accuracy
///   augmentation: semitone_shift, detune, max_semitones, max_detune
///   crf:          learning_rate, l1, batch_size, sequence_length, patience, max_epochs
///   data:         manifest, test_folds (list of ints), output
///   seed:         integer
struct PipelineConfig {
    FrameParams frame{};
    FilterbankParams filterbank{};
    std::size_t context = 7;

    TrainConfig cnn{};
    double validation_fraction = 0.1;
    FeatureTap feature_tap = FeatureTap::Rectified;

    CrfTrainConfig crf{};

    std::filesystem::path manifest;
    std::vector<int> test_folds;
    std::filesystem::path output = "chordrec_out";
    std::uint64_t seed = 0;

    /// Throws UsageError on out-of-range values.
    void validate() const;
    /// Effective configuration as YAML.
    std::string to_yaml() const;
};

/// Parses YAML text; throws UsageError on unknown keys or bad values.
PipelineConfig parse_config(const std::string& yaml_text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Output layout below config.output.
struct OutputLayout {
    std::filesystem::path root;
    std::filesystem::path cache() const { return root / "cache"; }
    std::filesystem::path model() const { return root / "model"; }
    std::filesystem::path cnn_checkpoint() const { return model() / "cnn.ckpt"; }
    std::filesystem::path crf_checkpoint() const { return model() / "crf.ckpt"; }
    std::filesystem::path predictions() const { return root / "predictions"; }
    std::filesystem::path analysis() const { return root / "analysis"; }
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

struct ExtractReport {
    std::size_t extracted = 0;
    std::size_t cached = 0;
    std::vector<std::string> failures;  ///< "id: reason"
};

/// Computes the spectrogram and frame labels of every manifest song into the
/// cache. A song is recomputed only when its audio, annotation or front-end
/// settings changed. Failing songs are reported and skipped.
ExtractReport cmd_extract(const PipelineConfig& config, std::ostream& log);

/// Loads cached songs of the manifest (extracting as needed).
FrameDataset load_dataset(const PipelineConfig& config, std::ostream& log);

/// Songs whose fold is (not) among config.test_folds.
FrameDataset select_folds(const FrameDataset& data, const std::vector<int>& folds, bool include);

enum class TrainStage { All, Cnn, Crf };

struct TrainReport {
    TrainLog cnn;
    CrfTrainLog crf;
    std::vector<std::string> train_ids, validation_ids;
};

/// Stage 1 trains the CNN on the non-test songs; stage 2 freezes it, extracts
/// averaged features and trains the CRF. Throws DataError when stage 2 runs
/// without a stage 1 checkpoint.
TrainReport cmd_train(const PipelineConfig& config, TrainStage stage, std::ostream& log);

struct Prediction {
    std::vector<ChordLabel> viterbi;
    std::vector<ChordLabel> argmax;
    double frame_rate = 10.0;
};

/// Decodes one spectrogram with trained models.
Prediction predict_spectrogram(const AuditoryModel& model, const CrfParams& crf, const Spectrogram& spec);

/// Predicts an audio file and writes the Viterbi segments to `out_lab` (and
/// the frame-wise argmax segments next to it when `with_argmax`).
Prediction cmd_predict(const PipelineConfig& config, const std::filesystem::path& audio,
                       const std::filesystem::path& out_lab, bool with_argmax, std::ostream& log);

/// Predicts every test-fold song of the manifest into the predictions directory
/// as <id>.lab and <id>.argmax.lab.
std::vector<std::string> cmd_predict_corpus(const PipelineConfig& config, std::ostream& log);

struct SongScore {
    std::string id;
    WcsrResult result;
    std::string error;  ///< non-empty when the song could not be scored
};

struct EvaluationReport {
    std::vector<SongScore> songs;
    std::optional<double> corpus;

    /// One JSON record per song plus a corpus record, one per line.
    void write(std::ostream& out) const;
};

/// Scores <id>.lab in `predictions` against every <id>.lab annotation in
/// `annotations`. Missing or unreadable predictions are listed as errors.
EvaluationReport cmd_evaluate(const std::filesystem::path& predictions, const std::filesystem::path& annotations);

/// Writes the weight analyses of the trained CNN to `out_dir`.
std::vector<std::filesystem::path> cmd_analyze(const PipelineConfig& config, const std::filesystem::path& out_dir);

}  // namespace chordrec
