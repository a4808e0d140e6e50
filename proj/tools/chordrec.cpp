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


// chordrec: chord recognition from audio.
//
//   chordrec synth-corpus DIR           write a synthetic corpus with manifest.json
//   chordrec extract [MANIFEST]         cache spectrograms and frame labels
//   chordrec train [--stage S]          train the CNN, then the CRF on its features
//   chordrec predict [AUDIO -o LAB]     decode one file, or every test-fold song
//   chordrec evaluate PRED_DIR ANN_DIR  per-song and corpus WCSR
//   chordrec analyze [--dir DIR]        weight analyses of the trained CNN
//
// Exit codes: 0 ok, 1 usage error, 2 data error, 3 numeric failure.

#include "chordrec/errors.hpp"
#include "chordrec/pipeline.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

using namespace chordrec;

int main(int argc, char** argv) {
    CLI::App app{"Chord recognition with a convolutional network and a linear-chain CRF"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::vector<int> folds;
    std::string output;
    app.add_option("--config", config_path, "YAML config file (defaults apply to missing keys)");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--folds", folds, "comma-separated test folds")->delimiter(',');
    app.add_option("--output", output, "output directory");

    auto* synth = app.add_subcommand("synth-corpus", "write a synthetic corpus");
    std::string synth_dir;
    SynthConfig sc;
    synth->add_option("dir", synth_dir, "output directory")->required();
    synth->add_option("--songs", sc.num_songs, "number of songs");
    synth->add_option("--seconds", sc.song_seconds, "duration of each song");
    synth->add_option("--noise", sc.noise_level, "noise standard deviation");
    synth->add_option("--no-chord", sc.no_chord_probability, "probability of a no-chord segment");
    synth->add_option("--num-folds", sc.num_folds, "number of folds to assign");

    auto* extract = app.add_subcommand("extract", "cache spectrograms and frame labels");
    std::string manifest;
    extract->add_option("manifest", manifest, "dataset manifest (overrides data.manifest)");

    auto* train = app.add_subcommand("train", "train the CNN and the CRF");
    std::string stage = "all";
    train->add_option("manifest", manifest, "dataset manifest (overrides data.manifest)");
    train->add_option("--stage", stage, "all, cnn or crf")->check(CLI::IsMember({"all", "cnn", "crf"}));

    auto* predict = app.add_subcommand("predict", "decode audio to chord segments");
    std::string audio, out_lab;
    bool with_argmax = false;
    predict->add_option("audio", audio, "audio file; without it every test-fold song is decoded");
    predict->add_option("-o,--lab", out_lab, "output .lab path");
    predict->add_flag("--argmax", with_argmax, "also write the frame-wise argmax segments");
    predict->add_option("--manifest", manifest, "dataset manifest (overrides data.manifest)");

    auto* evaluate = app.add_subcommand("evaluate", "score predictions against annotations");
    std::string pred_dir, ann_dir, report_path;
    evaluate->add_option("predictions", pred_dir, "directory of <id>.lab predictions")->required();
    evaluate->add_option("annotations", ann_dir, "directory of <id>.lab annotations")->required();
    evaluate->add_option("--report", report_path, "also write the report to this file");

    auto* analyze = app.add_subcommand("analyze", "analyse the trained classifier weights");
    std::string analysis_dir;
    analyze->add_option("--dir", analysis_dir, "output directory (default <output>/analysis)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        PipelineConfig config = config_path.empty() ? PipelineConfig{} : load_config(config_path);
        if (seed) config.seed = *seed;
        if (!folds.empty()) config.test_folds = folds;
        if (!output.empty()) config.output = output;
        if (!manifest.empty()) config.manifest = manifest;
        config.validate();
        std::cerr << "# effective config\n" << config.to_yaml();

        if (synth->parsed()) {
            sc.seed = config.seed;
            const auto entries = write_synthetic_corpus(sc, synth_dir);
            std::cerr << "wrote " << entries.size() << " songs to " << synth_dir << '\n';
            return 0;
        }
        if (extract->parsed()) {
            const ExtractReport r = cmd_extract(config, std::cerr);
            return r.failures.empty() ? 0 : 2;
        }
        if (train->parsed()) {
            const TrainStage s = stage == "cnn" ? TrainStage::Cnn : stage == "crf" ? TrainStage::Crf : TrainStage::All;
            cmd_train(config, s, std::cerr);
            return 0;
        }
        if (predict->parsed()) {
            if (audio.empty()) {
                cmd_predict_corpus(config, std::cerr);
            } else {
                if (out_lab.empty()) throw UsageError("predict needs -o/--lab with an audio file");
                cmd_predict(config, audio, out_lab, with_argmax, std::cerr);
            }
            return 0;
        }
        if (evaluate->parsed()) {
            const EvaluationReport r = cmd_evaluate(pred_dir, ann_dir);
            r.write(std::cout);
            if (!report_path.empty()) {
                std::ofstream f(report_path);
                if (!f) throw DataError("cannot write " + report_path);
                r.write(f);
            }
            bool failed = !r.corpus.has_value();
            for (const auto& s : r.songs) failed = failed || !s.error.empty();
            return failed ? 2 : 0;
        }
        if (analyze->parsed()) {
            const auto dir = analysis_dir.empty() ? OutputLayout{config.output}.analysis()
                                                  : std::filesystem::path(analysis_dir);
            for (const auto& f : cmd_analyze(config, dir)) std::cout << f.string() << '\n';
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
