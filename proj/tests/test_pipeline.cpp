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


#include "chordrec/errors.hpp"
#include "chordrec/pipeline.hpp"
#include "chordrec/synth.hpp"

#include "test_util.hpp"

#include <catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

using namespace chordrec;
using Catch::Approx;

namespace {

PipelineConfig tiny_config(const std::filesystem::path& dir, std::size_t songs, double seconds) {
    SynthConfig sc;
    sc.num_songs = songs;
    sc.song_seconds = seconds;
    sc.num_folds = 4;
    write_synthetic_corpus(sc, dir / "corpus");
    PipelineConfig cfg;
    cfg.manifest = dir / "corpus" / "manifest.json";
    cfg.output = dir / "out";
    cfg.test_folds = {0};
    return cfg;
}

}  // namespace

TEST_CASE("config defaults and overrides") {
    const PipelineConfig d = parse_config("");
    CHECK(d.frame.frame_size == 8192);
    CHECK(d.frame.hop_size == 4410);
    CHECK(d.context == 7);
    CHECK(d.cnn.batch_size == 512);
    CHECK(d.cnn.patience == 5);
    CHECK(d.cnn.l2 == 1e-7);
    CHECK(d.crf.learning_rate == 0.01);
    CHECK(d.crf.batch_size == 32);
    CHECK(d.crf.sequence_length == 1024);
    CHECK(d.feature_tap == FeatureTap::Rectified);

    const PipelineConfig c = parse_config("cnn:\n  batch_size: 16\ncrf:\n  l1: 0.5\ndata:\n  test_folds: [1, 3]\nseed: 9\n");
    CHECK(c.cnn.batch_size == 16);
    CHECK(c.crf.l1 == 0.5);
    CHECK(c.test_folds == std::vector<int>{1, 3});
    CHECK(c.seed == 9);
}

TEST_CASE("config rejects unknown keys and bad values") {
    CHECK_THROWS_AS(parse_config("cnn:\n  bach_size: 3\n"), UsageError);
    CHECK_THROWS_AS(parse_config("network:\n  x: 1\n"), UsageError);
    CHECK_THROWS_AS(parse_config("cnn:\n  batch_size: lots\n"), UsageError);
    CHECK_THROWS_AS(parse_config("cnn:\n  validation_fraction: 1.5\n"), UsageError);
    CHECK_THROWS_AS(parse_config("frontend:\n  max_hz: 30000\n"), UsageError);
    CHECK_THROWS_AS(parse_config("[1, 2"), UsageError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.yaml"), UsageError);
}

TEST_CASE("effective config round trips through yaml") {
    PipelineConfig c = parse_config("cnn:\n  learning_rate: 0.002\n  feature_tap: normalized\naugmentation:\n  detune: false\n");
    const PipelineConfig r = parse_config(c.to_yaml());
    CHECK(r.to_yaml() == c.to_yaml());
    CHECK(r.cnn.adam.learning_rate == 0.002);
    CHECK(r.feature_tap == FeatureTap::Normalized);
    CHECK_FALSE(r.cnn.augmentation.detune);
}

TEST_CASE("fnv1a reference values") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("extraction caches spectrograms and skips corrupt audio") {
    const auto dir = testing::temp_dir("extract");
    PipelineConfig cfg = tiny_config(dir, 3, 30.0);
    std::ostringstream log;
    auto r = cmd_extract(cfg, log);
    CHECK(r.extracted == 3);
    CHECK(r.cached == 0);
    r = cmd_extract(cfg, log);
    CHECK(r.extracted == 0);
    CHECK(r.cached == 3);

    const FrameDataset data = load_dataset(cfg, log);
    REQUIRE(data.num_songs() == 3);
    for (const auto& s : data.songs) {
        CHECK(s.spectrogram.num_frames() == 300);
        CHECK(s.spectrogram.num_bands() == 105);
        CHECK(s.labels.size() == 300);
    }
    CHECK(select_folds(data, {0}, true).num_songs() == 1);
    CHECK(select_folds(data, {0}, false).num_songs() == 2);

    std::ofstream(dir / "corpus" / "synth_001.wav", std::ios::trunc) << "garbage";
    r = cmd_extract(cfg, log);
    CHECK(r.failures.size() == 1);
    CHECK(r.cached == 2);
    CHECK(load_dataset(cfg, log).num_songs() == 2);
}

TEST_CASE("crf stage refuses to run without a cnn checkpoint") {
    const auto dir = testing::temp_dir("nockpt");
    PipelineConfig cfg = tiny_config(dir, 3, 2.0);
    std::ostringstream log;
    CHECK_THROWS_AS(cmd_train(cfg, TrainStage::Crf, log), DataError);
    PipelineConfig none;
    CHECK_THROWS_AS(cmd_extract(none, log), UsageError);
}

TEST_CASE("evaluate scores identity, transposition and missing files") {
    const auto dir = testing::temp_dir("evaluate");
    std::filesystem::create_directories(dir / "ann");
    std::filesystem::create_directories(dir / "same");
    std::filesystem::create_directories(dir / "shifted");
    const std::string a = "0 2 C:maj\n2 3 N\n3 5 A:min7\n";
    const std::string b = "0 4 G:maj\n";
    std::ofstream(dir / "ann" / "a.lab") << a;
    std::ofstream(dir / "ann" / "b.lab") << b;
    std::ofstream(dir / "same" / "a.lab") << a;
    std::ofstream(dir / "same" / "b.lab") << b;
    std::ofstream(dir / "shifted" / "a.lab") << "0 2 C#:maj\n2 3 N\n3 5 A#:min\n";

    const auto same = cmd_evaluate(dir / "same", dir / "ann");
    REQUIRE(same.corpus.has_value());
    CHECK(*same.corpus == 1.0);

    const auto shifted = cmd_evaluate(dir / "shifted", dir / "ann");
    REQUIRE(shifted.songs.size() == 2);
    CHECK(shifted.songs[0].result.t_c == 0.0);
    CHECK(shifted.songs[0].error.empty());
    CHECK_FALSE(shifted.songs[1].error.empty());  // b.lab is missing
    std::ostringstream os;
    shifted.write(os);
    CHECK(os.str().find("\"b\"") != std::string::npos);

    CHECK_THROWS_AS(cmd_evaluate(dir / "nope", dir / "ann"), DataError);
}

TEST_CASE("a tiny corpus runs through every stage") {
    const auto dir = testing::temp_dir("smoke");
    PipelineConfig cfg = tiny_config(dir, 4, 3.0);
    cfg.cnn.batch_size = 32;
    cfg.cnn.max_epochs = 1;
    cfg.crf.max_epochs = 2;
    cfg.crf.batch_size = 2;
    std::ostringstream log;
    cmd_extract(cfg, log);
    const TrainReport tr = cmd_train(cfg, TrainStage::All, log);
    CHECK(tr.cnn.epochs.size() == 1);
    CHECK(tr.crf.epochs.size() == 2);
    const OutputLayout out{cfg.output};
    CHECK(std::filesystem::exists(out.cnn_checkpoint()));
    CHECK(std::filesystem::exists(out.crf_checkpoint()));

    const auto ids = cmd_predict_corpus(cfg, log);
    REQUIRE(ids.size() == 1);
    CHECK(std::filesystem::exists(out.predictions() / (ids[0] + ".lab")));
    CHECK(std::filesystem::exists(out.predictions() / (ids[0] + ".argmax.lab")));

    const auto p = cmd_predict(cfg, dir / "corpus" / (ids[0] + ".wav"), dir / "single.lab", false, log);
    CHECK(p.viterbi.size() == 30);
    CHECK(std::filesystem::exists(dir / "single.lab"));

    const auto files = cmd_analyze(cfg, dir / "analysis");
    CHECK(files.size() >= 7);
}
