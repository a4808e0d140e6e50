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


#include "chordrec/annotations.hpp"
#include "chordrec/augmentation.hpp"
#include "chordrec/chords.hpp"
#include "chordrec/dataset.hpp"
#include "chordrec/errors.hpp"
#include "chordrec/serialization.hpp"

#include "test_util.hpp"

#include <catch_amalgamated.hpp>

#include <fstream>
#include <set>
#include <sstream>

using namespace chordrec;
using Catch::Approx;

TEST_CASE("class indices follow major C..B, minor c..b, then N") {
    CHECK(ChordLabel::major(0).index() == 0);
    CHECK(ChordLabel::major(11).index() == 11);
    CHECK(ChordLabel::minor(0).index() == 12);
    CHECK(ChordLabel::minor(9).index() == 21);
    CHECK(ChordLabel::no_chord().index() == 24);
    CHECK(ChordLabel::minor(9).name() == "A:min");
    CHECK(ChordLabel::major(6).name() == "F#:maj");
    CHECK(ChordLabel::no_chord().name() == "N");
    CHECK(ChordLabel::major(10).transposed(3) == ChordLabel::major(1));
    CHECK(ChordLabel::minor(1).transposed(-4) == ChordLabel::minor(9));
    CHECK(ChordLabel::no_chord().transposed(2) == ChordLabel::no_chord());
    CHECK_THROWS_AS(ChordLabel(25), DataError);
    for (int i = 0; i < 25; ++i) CHECK(reduce_label(ChordLabel(i).name()) == ChordLabel(i));
}

TEST_CASE("roots parse with any number of accidentals") {
    CHECK(parse_root("C") == 0);
    CHECK(parse_root("Eb") == 3);
    CHECK(parse_root("Cb") == 11);
    CHECK(parse_root("B#") == 0);
    CHECK(parse_root("F##") == 7);
    CHECK(parse_root("Abb") == 7);
    CHECK_THROWS_AS(parse_root("H"), DataError);
    CHECK_THROWS_AS(parse_root(""), DataError);
}

TEST_CASE("quality intervals cover shorthands and explicit lists") {
    CHECK(quality_intervals("maj") == std::set<int>{0, 4, 7});
    CHECK(quality_intervals("min7") == std::set<int>{0, 3, 7, 10});
    CHECK(quality_intervals("dim7") == std::set<int>{0, 3, 6, 9});
    CHECK(quality_intervals("(1,b3,5)") == std::set<int>{0, 3, 7});
    CHECK(quality_intervals("maj(9)") == std::set<int>{0, 4, 7, 14});
    CHECK(quality_intervals("7(*5)") == std::set<int>{0, 4, 10});
    CHECK_THROWS_AS(quality_intervals("wibble"), DataError);
    CHECK_THROWS_AS(quality_intervals("(1,q3)"), DataError);
}

TEST_CASE("labels reduce by the quality of their third") {
    struct Case {
        const char* raw;
        int index;
        bool mapped;
    };
    const Case cases[] = {
        {"C", 0, true},          {"C:maj", 0, true},     {"C:maj7", 0, true},   {"G:7", 7, true},
        {"D:min", 14, true},     {"D:min7", 14, true},   {"A:hdim7", 21, true}, {"B:dim", 23, true},
        {"Eb:aug", 3, true},     {"F#:min/b3", 18, true}, {"Bb:maj/5", 10, true}, {"C:(1,b3,5)", 12, true},
        {"C:sus4", 24, false},   {"C:sus2", 24, false},  {"E:5", 24, false},    {"C:1", 24, false},
        {"C:(1,5)", 24, false},  {"C:minmaj7", 12, true}, {"Db:maj6", 1, true}, {"C:7(*3)", 24, false},
        {"N", 24, true},         {"X", 24, false},       {"C:qq", 24, false},
    };
    for (const auto& c : cases) {
        INFO(c.raw);
        const auto r = reduce_label_detailed(c.raw);
        CHECK(r.label.index() == c.index);
        CHECK(r.mapped == c.mapped);
    }
    CHECK_THROWS_AS(reduce_label("Q:maj"), DataError);
}

TEST_CASE("lab files parse, sort and round trip") {
    const auto t = parse_lab_string("# header\n1.0 2.5 G:min\n\n0.0\t1.0  C\n");
    REQUIRE(t.segments.size() == 2);
    CHECK(t.segments[0] == AnnotatedSegment{0.0, 1.0, "C"});
    CHECK(t.segments[1] == AnnotatedSegment{1.0, 2.5, "G:min"});
    std::ostringstream os;
    write_lab(os, t);
    CHECK(parse_lab_string(os.str()).segments == t.segments);

    CHECK_THROWS_AS(parse_lab_string("0 1\n"), DataError);
    CHECK_THROWS_AS(parse_lab_string("1 0.5 C\n"), DataError);
    CHECK_THROWS_AS(parse_lab_string("0 2 C\n1 3 D\n"), DataError);
    CHECK_THROWS_AS(parse_lab_string("a b C\n"), DataError);
    CHECK_THROWS_AS(parse_lab(std::filesystem::path("/nonexistent/x.lab")), DataError);
}

TEST_CASE("frame labels take the segment with the largest overlap") {
    const auto t = parse_lab_string("0 0.26 C\n0.26 0.52 A:min\n0.52 0.7 C:sus4\n");
    const auto f = frames_from_annotations(t, 10.0, 9);
    // frame i spans [(i-0.5)/10, (i+0.5)/10]
    const std::vector<ChordLabel> expect{ChordLabel::major(0), ChordLabel::major(0), ChordLabel::major(0),
                                         ChordLabel::minor(9), ChordLabel::minor(9), ChordLabel::minor(9),
                                         ChordLabel::no_chord(), ChordLabel::no_chord(), ChordLabel::no_chord()};
    CHECK(f == expect);
}

TEST_CASE("semitone shift moves bands and transposes the label") {
    ContextWindow w;
    w.values = RowMatrixF::Zero(105, 15);
    for (Eigen::Index r = 0; r < 105; ++r) w.values.row(r).setConstant(static_cast<float>(r + 1));
    const auto [up, label] = semitone_shift(w, ChordLabel::minor(10), 3);
    CHECK(label == ChordLabel::minor(1));
    for (Eigen::Index r = 0; r < 105; ++r) CHECK(up.values(r, 4) == (r < 6 ? 0.0f : static_cast<float>(r - 5)));
    const auto [down, l2] = semitone_shift(w, ChordLabel::no_chord(), -2);
    CHECK(l2 == ChordLabel::no_chord());
    CHECK(down.values(0, 0) == 5.0f);
    CHECK(down.values(104, 0) == 0.0f);
    CHECK_THROWS_AS(semitone_shift(w, ChordLabel::major(0), 5), DataError);
}

TEST_CASE("detuning interpolates linearly between bands") {
    ContextWindow w;
    w.values = RowMatrixF::Zero(105, 15);
    for (Eigen::Index r = 0; r < 105; ++r) w.values.row(r).setConstant(static_cast<float>(r));
    const auto d = detune_shift(w, 0.25);  // half a band upwards
    for (Eigen::Index r = 1; r < 105; ++r) CHECK(d.values(r, 0) == Approx(r - 0.5));
    CHECK(d.values(0, 0) == Approx(0.0));
    CHECK(detune_shift(w, 0.0).values == w.values);
    CHECK_THROWS_AS(detune_shift(w, 0.5), DataError);
}

TEST_CASE("mini-batch stream covers every frame once per epoch") {
    FrameDataset data;
    for (int s = 0; s < 3; ++s) {
        SongData sd;
        sd.id = "s" + std::to_string(s);
        sd.spectrogram.values = RowMatrixF::Constant(7 + s, 105, static_cast<float>(s));
        sd.labels.assign(static_cast<std::size_t>(7 + s), ChordLabel::major(s));
        data.songs.push_back(sd);
    }
    MinibatchStream stream(data, 5, AugmentationPolicy::disabled(), 1);
    CHECK(stream.num_frames() == 24);
    CHECK(stream.batches_per_epoch() == 5);
    stream.start_epoch();
    Minibatch b;
    std::map<int, int> counts;
    std::size_t total = 0;
    while (stream.next(b)) {
        REQUIRE(b.inputs.dim(1) == 1);
        REQUIRE(b.inputs.dim(2) == 105);
        REQUIRE(b.inputs.dim(3) == 15);
        for (std::size_t i = 0; i < b.labels.size(); ++i) {
            ++counts[b.labels[i]];
            CHECK(b.targets[i * 25 + static_cast<std::size_t>(b.labels[i])] == 1.0f);
            // inputs are constant per song, so they must match the label's song
            CHECK(b.inputs.item(i)[0] == static_cast<float>(b.labels[i]));
        }
        total += b.labels.size();
    }
    CHECK(total == 24);
    CHECK(counts == std::map<int, int>{{0, 7}, {1, 8}, {2, 9}});
}

TEST_CASE("augmented batches transpose labels consistently") {
    FrameDataset data;
    SongData sd;
    sd.id = "x";
    sd.spectrogram.values = RowMatrixF::Zero(40, 105);
    sd.labels.assign(40, ChordLabel::major(2));
    data.songs.push_back(sd);
    MinibatchStream stream(data, 16, AugmentationPolicy{true, false, 4, 0.4}, 9);
    stream.start_epoch();
    Minibatch b;
    std::set<int> shifts;
    while (stream.next(b))
        for (std::size_t i = 0; i < b.labels.size(); ++i) {
            const int k = b.semitone_shifts[i];
            CHECK(std::abs(k) <= 4);
            CHECK(b.labels[i] == ChordLabel::major(2).transposed(k).index());
            shifts.insert(k);
        }
    CHECK(shifts.size() > 3);
}

TEST_CASE("dataset split and validation") {
    const auto [train, val] = split_by_song(20, 0.1, 3);
    CHECK(train.size() == 18);
    CHECK(val.size() == 2);
    std::set<std::size_t> all(train.begin(), train.end());
    all.insert(val.begin(), val.end());
    CHECK(all.size() == 20);
    CHECK(split_by_song(2, 0.01, 0).second.size() == 1);

    FrameDataset d;
    SongData s;
    s.id = "bad";
    s.spectrogram.values = RowMatrixF::Zero(5, 105);
    s.labels.resize(4);
    d.songs.push_back(s);
    CHECK_THROWS_AS(d.validate(), DataError);
}

TEST_CASE("manifest round trip resolves relative paths") {
    const auto dir = testing::temp_dir("manifest");
    write_manifest(dir / "m.json", {{"a", dir / "a.wav", dir / "a.lab", 3}});
    const auto m = read_manifest(dir / "m.json");
    REQUIRE(m.size() == 1);
    CHECK(m[0].id == "a");
    CHECK(m[0].fold == 3);
    CHECK(std::filesystem::weakly_canonical(m[0].audio) == std::filesystem::weakly_canonical(dir / "a.wav"));
    std::ofstream(dir / "bad.json") << "{\"songs\": [{\"id\": 3}]}";
    CHECK_THROWS_AS(read_manifest(dir / "bad.json"), DataError);
}

TEST_CASE("container round trips every dtype and rejects corruption") {
    Container c;
    c.meta["kind"] = "test";
    c.put("f", Tensor<float>(Shape{2, 3}, std::vector<float>{1, 2, 3, 4, 5, 6}));
    c.put("d", Tensor<double>(Shape{1}, std::vector<double>{0.1}));
    c.put("i", Tensor<std::int32_t>(Shape{2}, std::vector<std::int32_t>{-7, 9}));
    const auto bytes = c.serialize();
    const auto r = Container::deserialize(bytes);
    CHECK(r.meta["kind"] == "test");
    CHECK(r.get_f32("f") == c.get_f32("f"));
    CHECK(r.get_f64("d")[0] == 0.1);
    CHECK(r.get_i32("i")[0] == -7);
    CHECK_THROWS_AS(r.get_f64("f"), DataError);

    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(Container::deserialize(bad), DataError);
    auto cut = bytes;
    cut.resize(cut.size() - 4);
    CHECK_THROWS_AS(Container::deserialize(cut), DataError);
}
