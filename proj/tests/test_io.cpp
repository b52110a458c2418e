#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "diraclab/io.hpp"

using namespace diraclab;
using namespace diraclab::io;

namespace {

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("diraclab-io-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Csv, QuotingAndRoundTripDigits) {
  Table t{{"a", "b", "c"}, {}};
  t.add(0.1, std::string("x,y"), std::string("say \"hi\""));
  t.add(std::numeric_limits<double>::quiet_NaN(), -std::numeric_limits<double>::infinity(), true);
  std::string s = to_csv(t);
  EXPECT_EQ(s, "a,b,c\n0.10000000000000001,\"x,y\",\"say \"\"hi\"\"\"\nnan,-inf,1\n");
  EXPECT_EQ(std::stod(cell(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_THROW(t.add(1.0), std::logic_error);
}

TEST(Csv, AtomicWriteLeavesNoTemporary) {
  fs::path d = scratch_dir("csv");
  Table t{{"x"}, {}};
  t.add(2.5);
  write_csv(d / "sub" / "out.csv", t);
  EXPECT_EQ(slurp(d / "sub" / "out.csv"), "x\n2.5\n");
  EXPECT_FALSE(fs::exists(d / "sub" / "out.csv.tmp"));
  // identical inputs, identical bytes
  write_csv(d / "again.csv", t);
  EXPECT_EQ(slurp(d / "sub" / "out.csv"), slurp(d / "again.csv"));
}

TEST(Jsonl, OneLinePerTrialAndSummaryColumns) {
  EstimateReport r;
  r.id = "demo";
  r.add(1.0, 2.0);
  r.add(3.0, 2.0);
  r.add(0.5, 1.0);
  r.finalize();
  r.set_fit(fit_line({0, 1, 2}, {0, 1, 1}));
  std::string s = to_jsonl(report_lines(r));
  std::istringstream is(s);
  std::string line;
  int k = 0;
  while (std::getline(is, line)) {
    json j = json::parse(line);
    EXPECT_EQ(j.at("id"), "demo");
    EXPECT_EQ(j.at("trial"), k);
    EXPECT_DOUBLE_EQ(j.at("ratio").get<double>(), r.trials[k].ratio());
    ++k;
  }
  EXPECT_EQ(k, 3);
  Table t = report_summary({r});
  EXPECT_EQ(t.columns.front(), "id");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][3], "1.5");
  // slope 0.5, se sqrt(1/12), t quantile with one degree of freedom 12.7062
  EXPECT_NEAR(std::stod(t.rows[0][5]), 0.5 - 12.706204736 * std::sqrt(1.0 / 12.0), 1e-6);
  EXPECT_NEAR(std::stod(t.rows[0][6]), 0.5 + 12.706204736 * std::sqrt(1.0 / 12.0), 1e-6);
}

TEST(Hash, FnvVectorsAndReserializationStability) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
  json a = json::parse(R"({"b": [1, 2.5], "a": {"y": true, "x": "s"}})");
  json b = json::parse("{\n  \"a\" : {\"x\":\"s\",\"y\":true},\n\"b\":[1,2.5]}");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a), config_hash(json::parse(a.dump(4))));
  b["b"][1] = 2.25;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(hex64(0xabcull), "0000000000000abc");
}

TEST(Snapshot, RoundTripIsBitIdentical) {
  Grid g(2, 8, 3.0);
  Rng rng = make_rng(5);
  Field f = random_band_field(g, rng, 0.5, 6.0, 4);
  Snapshot s{f, 1.25, 17, 0.75, 0x1234};
  std::string b = encode_snapshot(s);
  ASSERT_EQ(b.size(), 64u + 4 * 64 * 16);
  EXPECT_EQ(b.substr(0, 8), "DLSNAP01");
  std::uint32_t n;
  std::memcpy(&n, b.data() + 8, 4);
  EXPECT_EQ(n, 2u);
  EXPECT_EQ(static_cast<unsigned char>(b[28]), 1u);
  Snapshot r = decode_snapshot(b);
  EXPECT_EQ(r.field.raw(), f.raw());
  EXPECT_TRUE(r.field.grid() == g);
  EXPECT_TRUE(r.field.is_fourier());
  EXPECT_TRUE(r.field.mean_zero());
  EXPECT_EQ(r.time, 1.25);
  EXPECT_EQ(r.step, 17);
  EXPECT_EQ(r.charge0, 0.75);
  EXPECT_EQ(r.config_hash, 0x1234u);

  fs::path d = scratch_dir("snap");
  write_snapshot(d / "a.snap", s);
  EXPECT_EQ(read_snapshot(d / "a.snap").field.raw(), f.raw());
}

TEST(Snapshot, EvolvedMeanModeSurvives) {
  Grid g(2, 8, 3.0);
  Rng rng = make_rng(9);
  Field f = random_band_field(g, rng, 0.5, 6.0, 4);
  f.at(1, 0) = cplx(0.25, -0.5);  // as left by the cubic term, flag still set
  Snapshot r = decode_snapshot(encode_snapshot({f, 0.0, 0, 0.0, 0}));
  EXPECT_EQ(r.field.raw(), f.raw());
  EXPECT_EQ(r.field.mean_zero(), f.mean_zero());
}

TEST(Snapshot, CorruptInputIsRejected) {
  Grid g(1, 8, 2.0);
  std::string b = encode_snapshot({Field(g, 2, false), 0.0, 0, 0.0, 0});
  std::string bad = b;
  bad[0] = 'X';
  EXPECT_THROW(decode_snapshot(bad), std::runtime_error);
  EXPECT_THROW(decode_snapshot(b.substr(0, b.size() - 1)), std::runtime_error);
  EXPECT_THROW(decode_snapshot(b.substr(0, 20)), std::runtime_error);
  bad = b;
  bad[8] = 9;  // n = 9
  EXPECT_THROW(decode_snapshot(bad), std::runtime_error);
  EXPECT_THROW(read_snapshot("/nonexistent/x.snap"), std::runtime_error);
}

TEST(Manifest, AtomicAndHashCheck) {
  fs::path d = scratch_dir("manifest");
  RunManifest m;
  m.config = json::parse(R"({"kind": "simulate", "seed": 3})");
  m.config_hash = config_hash(m.config);
  m.subcommand = "simulate";
  m.started = m.finished = utc_now();
  m.outputs = {"a.csv"};
  m.criteria = {{"charge", Verdict::Pass, ""}, {"resolved", Verdict::Unresolved, "N doubled"}};
  EXPECT_EQ(m.exit_code(), 3);
  write_manifest(d / "manifest.json", m);
  EXPECT_FALSE(fs::exists(d / "manifest.json.tmp"));
  EXPECT_TRUE(check_manifest(d / "manifest.json"));
  json j = json::parse(slurp(d / "manifest.json"));
  EXPECT_EQ(j.at("criteria").size(), 2u);
  EXPECT_EQ(j.at("exit_code"), 3);
  j["config"]["seed"] = 4;
  std::ofstream(d / "tampered.json") << j.dump();
  EXPECT_FALSE(check_manifest(d / "tampered.json"));
}

TEST(Tables, ResultTablesHaveOneRowPerSample) {
  NullGainResult g;
  g.n = 1;
  g.horizons = {16, 32};
  g.counter = {1, 1};
  g.co = {1, 1.4};
  EXPECT_EQ(table_of(g).rows.size(), 2u);
  BoundednessSummary b;
  BoundednessRow r;
  r.eps = 1;
  r.horizons = {1, 2, 4};
  r.sup_ratio = {1, 1, 1};
  b.rows = {r, r};
  EXPECT_EQ(table_of(b).rows.size(), 6u);
  MassHorizonResult m;
  m.rows.resize(4);
  EXPECT_EQ(table_of(m).rows.size(), 4u);
}
