#include "ecg/errors.hpp"
#include "ecg/segment.hpp"

#include "synth_mitdb.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <numeric>
#include <set>

using namespace ecg;

namespace {

std::vector<BeatSegment> make_segments(const std::map<BeatClass, std::size_t>& counts,
                                       std::uint64_t seed = 1) {
    Rng rng(seed);
    std::vector<BeatSegment> out;
    std::uint32_t idx = 0;
    for (const auto& [label, n] : counts)
        for (std::size_t i = 0; i < n; ++i) {
            BeatSegment s;
            s.label = label;
            s.record_id = std::to_string(100 + i % 7);
            s.annotation_index = idx++;
            for (auto& v : s.samples)
                v = static_cast<float>(2 * uniform_unit(rng) - 1);
            out.push_back(s);
        }
    return out;
}

std::set<std::pair<std::string, std::uint32_t>> keys(const std::vector<BeatSegment>& v) {
    std::set<std::pair<std::string, std::uint32_t>> k;
    for (const auto& s : v)
        k.insert({s.record_id, s.annotation_index});
    return k;
}

} // namespace

TEST(Window, RampIndexArithmetic) {
    std::vector<double> ramp(1000);
    std::iota(ramp.begin(), ramp.end(), 0.0);
    const auto w = extract_window(ramp, 100);
    ASSERT_EQ(w.size(), 200u);
    for (std::size_t i = 0; i < 200; ++i)
        EXPECT_EQ(w[i], static_cast<double>(i));
}

TEST(Window, BoundaryBeatsAreSkipped) {
    const std::vector<double> x(1000, 0.0);
    EXPECT_THROW(extract_window(x, 50), BoundarySkip);
    EXPECT_THROW(extract_window(x, 901), BoundarySkip);
    EXPECT_NO_THROW(extract_window(x, 900));
}

TEST(Reduce, CentreCrop) {
    std::vector<double> ramp(200);
    std::iota(ramp.begin(), ramp.end(), 0.0);
    const auto r = reduce_dimension(ramp);
    ASSERT_EQ(r.size(), 180u);
    EXPECT_EQ(r.front(), 10.0);
    EXPECT_EQ(r.back(), 189.0);
    const std::vector<double> c(200, 3.0);
    EXPECT_EQ(reduce_dimension(c), std::vector<double>(180, 3.0));
    EXPECT_THROW(reduce_dimension(std::vector<double>(199)), ShapeError);
}

TEST(Rescale, Examples) {
    EXPECT_EQ(rescale(std::vector<double>{0, 5, 10}), (std::vector<double>{-1, 0, 1}));
    EXPECT_EQ(rescale(std::vector<double>(180, 7.0)), std::vector<double>(180, 0.0));
    EXPECT_THROW(rescale(std::vector<double>{}), LengthError);
}

TEST(Rescale, RandomSegmentsAttainBothEnds) {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const auto r = rescale(ecg::testing::random_vector(rng, 180, -5.0, 9.0));
        EXPECT_EQ(*std::min_element(r.begin(), r.end()), -1.0);
        EXPECT_EQ(*std::max_element(r.begin(), r.end()), 1.0);
    }
}

TEST(Split, TenBeatsOfOneClass) {
    const auto segs = make_segments({{BeatClass::PVC, 10}});
    const auto split = build_split(segs, 1, std::nullopt);
    EXPECT_EQ(split.train.size(), 5u);
    EXPECT_EQ(split.test.size(), 5u);
}

TEST(Split, DeterministicForSeed) {
    const auto segs = make_segments({{BeatClass::NOR, 300}, {BeatClass::APC, 31}, {BeatClass::PVC, 77}});
    const auto a = build_split(segs, 42, 150);
    const auto b = build_split(segs, 42, 150);
    EXPECT_EQ(serialize_dataset(a.train), serialize_dataset(b.train));
    EXPECT_EQ(serialize_dataset(a.test), serialize_dataset(b.test));
    const auto c = build_split(segs, 43, 150);
    EXPECT_NE(serialize_dataset(a.train), serialize_dataset(c.train));
}

TEST(Split, DisjointAndStratified) {
    const std::map<BeatClass, std::size_t> counts = {{BeatClass::NOR, 501},
                                                     {BeatClass::LBBB, 60},
                                                     {BeatClass::RBBB, 33},
                                                     {BeatClass::APC, 9},
                                                     {BeatClass::PVC, 48}};
    const auto segs = make_segments(counts);
    const auto split = build_split(segs, 7, std::nullopt);
    const auto tk = keys(split.train), sk = keys(split.test);
    for (const auto& k : tk)
        EXPECT_FALSE(sk.count(k));
    EXPECT_EQ(tk.size() + sk.size(), segs.size());
    const auto ht = class_histogram(split.train), hs = class_histogram(split.test);
    for (std::size_t c = 0; c < kNumClasses; ++c)
        EXPECT_LE(std::max(ht[c], hs[c]) - std::min(ht[c], hs[c]), 1u);
}

TEST(Split, DownSamplesToExactSizeWithPoolMix) {
    const auto segs = make_segments({{BeatClass::NOR, 800}, {BeatClass::LBBB, 120},
                                     {BeatClass::RBBB, 40}, {BeatClass::APC, 20},
                                     {BeatClass::PVC, 20}});
    const auto split = build_split(segs, 9, 200);
    ASSERT_EQ(split.train.size(), 200u);
    ASSERT_EQ(split.test.size(), 200u);
    EXPECT_EQ(class_histogram(split.train), class_histogram(split.test));
    const auto h = class_histogram(split.train);
    EXPECT_EQ(h[class_id(BeatClass::NOR)], 160u);
    EXPECT_EQ(h[class_id(BeatClass::LBBB)], 24u);
    const auto tk = keys(split.train), sk = keys(split.test);
    for (const auto& k : tk)
        EXPECT_FALSE(sk.count(k));
}

TEST(Split, TooLargeIsSizeError) {
    const auto segs = make_segments({{BeatClass::NOR, 100}});
    EXPECT_THROW(build_split(segs, 1, 51), SizeError);
    EXPECT_NO_THROW(build_split(segs, 1, 50));
}

TEST(Dataset, SerializationRoundTrip) {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        auto segs = make_segments({{BeatClass::NOR, uniform_below(rng, 40)},
                                   {BeatClass::RBBB, uniform_below(rng, 5)}},
                                  static_cast<std::uint64_t>(trial));
        for (auto& s : segs)
            s.record_id = std::string(uniform_below(rng, 8), 'r');
        const auto bytes = serialize_dataset(segs);
        const auto back = deserialize_dataset(bytes);
        ASSERT_EQ(back.size(), segs.size());
        for (std::size_t i = 0; i < segs.size(); ++i) {
            EXPECT_EQ(back[i].samples, segs[i].samples);
            EXPECT_EQ(back[i].label, segs[i].label);
            EXPECT_EQ(back[i].record_id, segs[i].record_id);
            EXPECT_EQ(back[i].annotation_index, segs[i].annotation_index);
        }
        EXPECT_EQ(serialize_dataset(back), bytes);
    }
}

TEST(Dataset, Layout) {
    auto segs = make_segments({{BeatClass::APC, 1}});
    segs[0].record_id = "203";
    segs[0].annotation_index = 0x01020304;
    const auto b = serialize_dataset(segs);
    ASSERT_EQ(b.size(), 4u + 2 + 4 + 2 + 3 + 4 + 1 + 180 * 4);
    EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "ECGB");
    EXPECT_EQ(b[4], 1);
    EXPECT_EQ(b[5], 0);
    EXPECT_EQ(b[6], 1);
    EXPECT_EQ(b[10], 3);  // id length
    EXPECT_EQ(std::string(b.begin() + 12, b.begin() + 15), "203");
    EXPECT_EQ(b[15], 0x04);
    EXPECT_EQ(b[19], 3);  // APC
}

TEST(Dataset, CorruptInputs) {
    const auto good = serialize_dataset(make_segments({{BeatClass::NOR, 3}}));
    auto bad_magic = good;
    bad_magic[0] = 'X';
    EXPECT_THROW(deserialize_dataset(bad_magic), InputError);
    auto truncated = good;
    truncated.pop_back();
    EXPECT_THROW(deserialize_dataset(truncated), InputError);
    auto trailing = good;
    trailing.push_back(0);
    EXPECT_THROW(deserialize_dataset(trailing), InputError);
    auto bad_version = good;
    bad_version[4] = 9;
    EXPECT_THROW(deserialize_dataset(bad_version), InputError);
}

TEST(Dataset, CsvExport) {
    auto segs = make_segments({{BeatClass::LBBB, 2}});
    const auto dir = ecg::testing::scratch_dir("csv");
    write_dataset_csv(dir / "x.csv", segs);
    std::ifstream in(dir / "x.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_EQ(header.substr(0, 12), "label,s0,s1,");
    EXPECT_EQ(std::count(header.begin(), header.end(), ','), 180);
    EXPECT_EQ(row.substr(0, 5), "LBBB,");
    EXPECT_EQ(std::count(row.begin(), row.end(), ','), 180);
}

TEST(Segmentation, SyntheticRecordsGiveValidSegments) {
    const auto dir = ecg::testing::scratch_dir("seg_db");
    ecg::testing::write_synthetic_mitdb(dir, {.seconds = 60.0}, {"100", "109", "114"});
    const auto records = load_records(dir, {"100", "109", "114"});
    const auto index = select_dataset(records);
    const auto result = segment_beats(records, index);
    EXPECT_EQ(result.segments.size() + result.boundary_skips, index.beats.size());
    for (const auto& s : result.segments) {
        EXPECT_EQ(*std::min_element(s.samples.begin(), s.samples.end()), -1.0f);
        EXPECT_EQ(*std::max_element(s.samples.begin(), s.samples.end()), 1.0f);
    }
    const auto again = segment_beats(records, index);
    EXPECT_EQ(serialize_dataset(again.segments), serialize_dataset(result.segments));
}

TEST(RealDatabase, FirstBeatOfRecord100IsCentred) {
    const auto dir = ecg::testing::mitdb_dir();
    if (dir.empty())
        GTEST_SKIP() << "MITDB_DIR not set";
    const auto records = load_records(dir, {"100"});
    const auto index = select_dataset(records);
    const auto& rec = records[0];
    for (const auto& b : index.beats) {
        if (b.label != BeatClass::NOR || b.sample_index < 100)
            continue;
        const auto w = extract_window(rec.channels[static_cast<std::size_t>(b.channel)], b.sample_index);
        const auto peak = std::max_element(w.begin(), w.end()) - w.begin();
        EXPECT_LE(std::abs(peak - 100), 5);
        break;
    }
}
