#include <gtest/gtest.h>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "bench.hpp"
#include "bpann/error.hpp"
#include "bpann/texmex.hpp"
#include "commands.hpp"
#include "synth.hpp"

namespace fs = std::filesystem;

namespace bpann {
namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           ("bpann_" + std::to_string(::getpid()) + "_" + info->test_suite_name() + "_" +
            info->name());
    fs::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }
  std::string file(const std::string& name) const { return (dir_ / name).string(); }

 private:
  fs::path dir_;
};

void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void put_i32(std::vector<unsigned char>& b, std::int32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>((static_cast<std::uint32_t>(v) >> (8 * i)) & 0xff));
}

void put_f32(std::vector<unsigned char>& b, float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  put_i32(b, static_cast<std::int32_t>(u));
}

std::vector<char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Cli {
  int code = -1;
  std::string out, err;
};

Cli cli(std::vector<std::string> args) {
  std::ostringstream o, e;
  Cli r;
  r.code = cli::run(args, o, e);
  r.out = o.str();
  r.err = e.str();
  return r;
}

// ---------------------------------------------------------------------------
// Texmex files

TEST(Texmex, ReadsHandEncodedFvecs) {
  TempDir tmp;
  std::vector<unsigned char> b;
  put_i32(b, 3);
  for (float f : {1.0f, -2.5f, 0.25f}) put_f32(b, f);
  put_i32(b, 3);
  for (float f : {4.0f, 5.0f, 6.0f}) put_f32(b, f);
  write_bytes(tmp.file("a.fvecs"), b);

  const VectorSet s = read_vectors(tmp.file("a.fvecs"));
  ASSERT_EQ(s.size(), 2u);
  ASSERT_EQ(s.dim(), 3u);
  EXPECT_EQ(s.backing(), Backing::file_mapped);
  EXPECT_EQ(s.stride(), 4u);
  EXPECT_EQ(s.row(0)[1], -2.5f);
  EXPECT_EQ(s.row(1)[2], 6.0f);
}

TEST(Texmex, BvecsWidenToFloat) {
  TempDir tmp;
  std::vector<unsigned char> b;
  put_i32(b, 4);
  for (unsigned char c : {0, 7, 128, 255}) b.push_back(c);
  write_bytes(tmp.file("a.bvecs"), b);
  const VectorSet s = read_vectors(tmp.file("a.bvecs"));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(std::vector<float>(s.row(0).begin(), s.row(0).end()),
            (std::vector<float>{0.0f, 7.0f, 128.0f, 255.0f}));
}

TEST(Texmex, WriteReadRoundTrip) {
  TempDir tmp;
  const auto flat = testing::uniform(50, 7, 3);
  const VectorSet s = testing::make_set(7, flat);
  write_fvecs(tmp.file("r.fvecs"), s.matrix());
  const VectorSet back = read_vectors(tmp.file("r.fvecs"));
  ASSERT_EQ(back.size(), 50u);
  for (std::size_t i = 0; i < 50; ++i) {
    for (std::size_t d = 0; d < 7; ++d) ASSERT_EQ(back.row(i)[d], flat[i * 7 + d]);
  }
  EXPECT_EQ(fs::file_size(tmp.file("r.fvecs")), 50u * (4 + 7 * 4));

  std::vector<float> bytes{1, 2, 3, 250, 0, 9};
  const VectorSet bs = testing::make_set(3, bytes);
  write_bvecs(tmp.file("r.bvecs"), bs.matrix());
  const VectorSet bback = read_vectors(tmp.file("r.bvecs"));
  ASSERT_EQ(bback.size(), 2u);
  EXPECT_EQ(bback.row(1)[0], 250.0f);
  EXPECT_EQ(bback.row(1)[1], 0.0f);
  EXPECT_EQ(bback.row(0)[2], 3.0f);

  IntRows ir;
  ir.dim = 2;
  ir.count = 3;
  ir.values = {5, -1, 7, 0, 1 << 30, 3};
  write_ivecs(tmp.file("r.ivecs"), ir);
  const IntRows iback = read_ivecs(tmp.file("r.ivecs"));
  EXPECT_EQ(iback.dim, 2u);
  EXPECT_EQ(iback.count, 3u);
  EXPECT_EQ(iback.values, ir.values);
}

TEST(Texmex, BvecsRejectsNonByteValues) {
  TempDir tmp;
  const VectorSet s = testing::make_set(2, {1.0f, 256.0f});
  EXPECT_THROW(write_bvecs(tmp.file("x.bvecs"), s.matrix()), DomainError);
  const VectorSet t = testing::make_set(2, {1.5f, 2.0f});
  EXPECT_THROW(write_bvecs(tmp.file("y.bvecs"), t.matrix()), DomainError);
}

TEST(Texmex, MalformedFilesAreFormatErrors) {
  TempDir tmp;
  std::vector<unsigned char> trunc;
  put_i32(trunc, 2);
  put_f32(trunc, 1.0f);  // second component missing
  write_bytes(tmp.file("t.fvecs"), trunc);
  EXPECT_THROW(read_vectors(tmp.file("t.fvecs")), FormatError);

  std::vector<unsigned char> mixed;
  put_i32(mixed, 1);
  put_f32(mixed, 1.0f);
  put_i32(mixed, 2);
  put_f32(mixed, 1.0f);
  put_f32(mixed, 1.0f);
  write_bytes(tmp.file("m.fvecs"), mixed);
  EXPECT_THROW(read_vectors(tmp.file("m.fvecs")), FormatError);

  std::vector<unsigned char> neg;
  put_i32(neg, -4);
  write_bytes(tmp.file("n.fvecs"), neg);
  EXPECT_THROW(read_vectors(tmp.file("n.fvecs")), FormatError);

  EXPECT_THROW(read_vectors(tmp.file("data.txt")), UsageError);
  EXPECT_THROW(read_vectors(tmp.file("missing.fvecs")), StorageError);
}

TEST(Texmex, EmptyFileIsEmptySet) {
  TempDir tmp;
  write_bytes(tmp.file("e.fvecs"), {});
  const VectorSet s = read_vectors(tmp.file("e.fvecs"));
  EXPECT_TRUE(s.empty());
  EXPECT_EQ(s.dim(), 0u);
}

// ---------------------------------------------------------------------------
// Commands

class CliFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto m = testing::mixture(3000, 12, 15, 6.0f, 1.0f, 21);
    const auto q = testing::mixture(120, 12, 15, 6.0f, 1.0f, 21 + 1000);
    base_ = testing::make_set(12, m.data);
    queries_ = testing::make_set(12, q.data);
    write_fvecs(tmp_.file("base.fvecs"), base_.matrix());
    write_fvecs(tmp_.file("q.fvecs"), queries_.matrix());
  }

  std::string f(const std::string& name) const { return tmp_.file(name); }

  Cli build(const std::string& out, std::vector<std::string> extra = {},
            const std::string& threads = "2") {
    std::vector<std::string> a{"build",         "--data",      f("base.fvecs"), "--out",
                               f(out),          "--kappa-leaf", "64",           "--kappa-inner",
                               "8",             "--d-edge",    "8",            "--s-leaf",
                               "6",             "--threads",   threads};
    a.insert(a.end(), extra.begin(), extra.end());
    return cli(a);
  }

  TempDir tmp_;
  VectorSet base_, queries_;
};

TEST_F(CliFixture, GroundTruthMatchesIndependentSort) {
  const Cli r = cli({"groundtruth", "--data", f("base.fvecs"), "--queries", f("q.fvecs"), "--out",
                     f("gt.ivecs"), "-k", "5", "--threads", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const IntRows gt = read_ivecs(f("gt.ivecs"));
  ASSERT_EQ(gt.count, queries_.size());
  ASSERT_EQ(gt.dim, 5u);
  for (std::size_t qi = 0; qi < queries_.size(); ++qi) {
    // Squared distances in double, ties broken by id.
    std::vector<std::pair<double, std::int32_t>> all;
    for (std::size_t i = 0; i < base_.size(); ++i) {
      double s = 0;
      for (std::size_t d = 0; d < 12; ++d) {
        const double diff = double(base_.row(i)[d]) - double(queries_.row(qi)[d]);
        s += diff * diff;
      }
      all.emplace_back(s, static_cast<std::int32_t>(i));
    }
    std::partial_sort(all.begin(), all.begin() + 5, all.end());
    for (std::size_t j = 0; j < 5; ++j) ASSERT_EQ(gt.row(qi)[j], all[j].second) << qi << "/" << j;
  }

  const Cli far = cli({"groundtruth", "--data", f("base.fvecs"), "--queries", f("q.fvecs"),
                       "--out", f("far.ivecs"), "-k", "1", "--farthest"});
  ASSERT_EQ(far.code, 0) << far.err;
  const IntRows fgt = read_ivecs(f("far.ivecs"));
  std::size_t best = 0;
  double best_d = -1;
  for (std::size_t i = 0; i < base_.size(); ++i) {
    double s = 0;
    for (std::size_t d = 0; d < 12; ++d) {
      const double diff = double(base_.row(i)[d]) - double(queries_.row(0)[d]);
      s += diff * diff;
    }
    if (s > best_d) best_d = s, best = i;
  }
  EXPECT_EQ(fgt.row(0)[0], static_cast<std::int32_t>(best));
}

TEST_F(CliFixture, ExitCodes) {
  EXPECT_EQ(cli({}).code, cli::kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(cli({"--help"}).code, cli::kExitOk);
  EXPECT_EQ(cli({"build", "--data", f("base.fvecs")}).code, cli::kExitUsage);  // --out missing
  EXPECT_EQ(cli({"groundtruth", "--data", f("base.fvecs"), "--queries", f("q.fvecs"), "--out",
                 f("gt.ivecs"), "-k", "999999"})
                .code,
            cli::kExitUsage);
  EXPECT_EQ(build("x.bpann", {"--metric", "hamming"}).code, cli::kExitUsage);
  EXPECT_EQ(cli({"verify", "--index", f("nope.bpann")}).code, cli::kExitStorage);

  write_bytes(f("junk.bpann"), std::vector<unsigned char>(8192, 0x5a));
  EXPECT_EQ(cli({"verify", "--index", f("junk.bpann")}).code, cli::kExitFormat);

  ASSERT_EQ(build("ok.bpann").code, 0);
  // Flip a byte in the trailer: the checksum catches it.
  auto bytes = slurp(f("ok.bpann"));
  bytes[bytes.size() - 40] ^= 0x01;
  std::ofstream(f("bad.bpann"), std::ios::binary).write(bytes.data(), bytes.size());
  const Cli bad = cli({"verify", "--index", f("bad.bpann")});
  EXPECT_EQ(bad.code, cli::kExitIntegrity) << bad.err;

  EXPECT_EQ(cli({"query", "--index", f("ok.bpann"), "--vector", "1,2"}).code, cli::kExitUsage);
  EXPECT_EQ(cli({"query", "--index", f("ok.bpann"), "--vector", "1,x,3"}).code, cli::kExitUsage);
  EXPECT_EQ(cli({"view-demo", "--index", f("ok.bpann"), "--queries", f("q.fvecs"), "--policy",
                 "oracle"})
                .code,
            cli::kExitUsage);
}

TEST_F(CliFixture, BuildIsDeterministicAndVerifies) {
  ASSERT_EQ(build("a.bpann").code, 0);
  ASSERT_EQ(build("b.bpann", {}, "1").code, 0);
  EXPECT_EQ(slurp(f("a.bpann")), slurp(f("b.bpann")));
  const Cli v = cli({"verify", "--index", f("a.bpann")});
  EXPECT_EQ(v.code, 0) << v.err;
  EXPECT_NE(v.out.find("3000 vectors"), std::string::npos) << v.out;
  EXPECT_NE(v.out.find("skip edges yes"), std::string::npos) << v.out;
}

TEST_F(CliFixture, ConfigFileSuppliesDefaultsAndFlagsWin) {
  ASSERT_EQ(build("ix.bpann").code, 0);
  std::ofstream(f("q.toml")) << "[query]\nk = 2\nbeta = 64\n";
  const std::vector<std::string> base{"--config", f("q.toml"), "query", "--index", f("ix.bpann"),
                                      "--queries", f("q.fvecs")};
  const Cli from_file = cli(base);
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  EXPECT_NE(from_file.out.find("\n1\t"), std::string::npos);
  EXPECT_EQ(from_file.out.find("\n2\t"), std::string::npos) << from_file.out;
  auto with_flag = base;
  with_flag.insert(with_flag.end(), {"-k", "4"});
  const Cli flagged = cli(with_flag);
  ASSERT_EQ(flagged.code, 0) << flagged.err;
  EXPECT_NE(flagged.out.find("\n3\t"), std::string::npos) << flagged.out;
}

TEST_F(CliFixture, IndexWithoutEdgesRejectsEdgeSearch) {
  ASSERT_EQ(build("n.bpann", {"--no-edges"}).code, 0);
  const Cli ok = cli({"query", "--index", f("n.bpann"), "--queries", f("q.fvecs"), "--row", "2"});
  EXPECT_EQ(ok.code, 0) << ok.err;
  const Cli r = cli({"query", "--index", f("n.bpann"), "--queries", f("q.fvecs"), "--d-edge", "4"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("skip edges"), std::string::npos) << r.err;
}

TEST_F(CliFixture, QueryPrintsExactNearestForEasyQuery) {
  ASSERT_EQ(build("ix.bpann").code, 0);
  // A base vector queried against its own index comes back first at distance 0.
  std::ostringstream v;
  for (std::size_t d = 0; d < 12; ++d) v << (d ? "," : "") << std::setprecision(9) << base_.row(17)[d];
  const Cli r = cli({"query", "--index", f("ix.bpann"), "--vector", v.str(), "-k", "3", "--beta",
                     "64"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("0\t17\t0\n"), std::string::npos) << r.out;
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  std::vector<nlohmann::json> out;
  for (std::string line; std::getline(in, line);) out.push_back(nlohmann::json::parse(line));
  return out;
}

TEST_F(CliFixture, BenchSweepReportsConsistentRows) {
  ASSERT_EQ(build("ix.bpann").code, 0);
  ASSERT_EQ(cli({"groundtruth", "--data", f("base.fvecs"), "--queries", f("q.fvecs"), "--out",
                 f("gt.ivecs"), "-k", "10"})
                .code,
            0);
  const Cli r = cli({"bench", "--index", f("ix.bpann"), "--queries", f("q.fvecs"), "--gt",
                     f("gt.ivecs"), "--betas", "1,4,16,64", "--batches", "1,16", "--threads", "2",
                     "--jsonl", f("b.jsonl"), "--cache-fraction", "0.2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto recs = read_jsonl(f("b.jsonl"));
  ASSERT_EQ(recs.size(), 1u + 8u);
  EXPECT_EQ(recs[0]["type"], "meta");
  EXPECT_EQ(recs[0]["metric"], "euclidean");
  EXPECT_EQ(recs[0]["index_checksum"].get<std::string>().size(), 16u);

  double prev_recall = -1;
  for (std::size_t i = 1; i < recs.size(); ++i) {
    const auto& row = recs[i];
    EXPECT_EQ(row["type"], "row");
    EXPECT_EQ(row["queries"], 120);
    const double qps = row["qps"], secs = row["total_seconds"];
    EXPECT_NEAR(qps * secs, 120.0, 1e-6 * 120.0);
    EXPECT_LE(row["mean_latency_ms"].get<double>(), row["p99_latency_ms"].get<double>() + 1e-9);
    const double recall = row["recall_k_at_k"];
    EXPECT_GE(recall, 0.0);
    EXPECT_LE(recall, 1.0);
    // Batching must not change results: rows come in (beta, batch) order.
    if (row["config"]["batch"] == 16) {
      EXPECT_EQ(recall, recs[i - 1]["recall_k_at_k"].get<double>());
    } else {
      EXPECT_GE(recall, prev_recall);
      prev_recall = recall;
    }
  }
  EXPECT_GT(recs.back()["recall_k_at_k"].get<double>(), 0.95);
}

TEST_F(CliFixture, BenchRejectsNarrowGroundTruth) {
  ASSERT_EQ(build("ix.bpann").code, 0);
  ASSERT_EQ(cli({"groundtruth", "--data", f("base.fvecs"), "--queries", f("q.fvecs"), "--out",
                 f("gt.ivecs"), "-k", "5"})
                .code,
            0);
  const Cli r = cli({"bench", "--index", f("ix.bpann"), "--queries", f("q.fvecs"), "--gt",
                     f("gt.ivecs"), "-k", "10"});
  EXPECT_EQ(r.code, cli::kExitUsage);
}

TEST_F(CliFixture, TemporalSortKeepsGroundTruthAligned) {
  ASSERT_EQ(build("ix.bpann").code, 0);
  ASSERT_EQ(cli({"groundtruth", "--data", f("base.fvecs"), "--queries", f("q.fvecs"), "--out",
                 f("gt.ivecs"), "-k", "10"})
                .code,
            0);
  // Per-query results do not depend on serving order when the whole index is
  // resident, so a correctly reordered ground truth gives the same recall.
  auto recall = [&](bool temporal) {
    std::vector<std::string> a{"bench", "--index", f("ix.bpann"), "--queries", f("q.fvecs"),
                               "--gt", f("gt.ivecs"), "--betas", "3", "--in-memory", "--jsonl",
                               f("t.jsonl")};
    if (temporal) a.push_back("--temporal-sort");
    const Cli r = cli(a);
    EXPECT_EQ(r.code, 0) << r.err;
    return read_jsonl(f("t.jsonl")).at(1)["recall_k_at_k"].get<double>();
  };
  const double plain = recall(false);
  EXPECT_LT(plain, 1.0);  // otherwise a misaligned truth could go unnoticed
  EXPECT_EQ(recall(true), plain);
}

TEST_F(CliFixture, ViewDemoLogsEveryQuery) {
  ASSERT_EQ(build("ix.bpann").code, 0);
  const Cli r = cli({"view-demo", "--index", f("ix.bpann"), "--queries", f("q.fvecs"), "--data",
                     f("base.fvecs"), "--policy", "oracle", "--k-view", "300", "--temporal-sort",
                     "--jsonl", f("v.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto recs = read_jsonl(f("v.jsonl"));
  ASSERT_FALSE(recs.empty());
  std::size_t served = 0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(recs[i]["view_index"], i);
    EXPECT_GE(recs[i]["queries_served"].get<std::size_t>(), 1u);
    EXPECT_GT(recs[i]["mean_recall"].get<double>(), 0.0);
    served += recs[i]["queries_served"].get<std::size_t>();
  }
  EXPECT_EQ(served, queries_.size());
}

TEST(BenchLib, MeanRecallArithmetic) {
  IntRows truth;
  truth.dim = 3;
  truth.count = 2;
  truth.values = {1, 2, 3, 4, 5, 6};
  std::vector<SearchResult> res(2);
  res[0].neighbors = {{1, 0.f}, {9, 0.f}, {3, 0.f}};
  res[1].neighbors = {{7, 0.f}, {8, 0.f}, {9, 0.f}};
  EXPECT_DOUBLE_EQ(cli::mean_recall(res, truth, 3), (2.0 / 3.0 + 0.0) / 2.0);
  EXPECT_DOUBLE_EQ(cli::mean_recall(res, truth, 1), 0.5);
}

TEST(Threads, EnvironmentOverridesDefault) {
  ::unsetenv("BPANN_THREADS");
  EXPECT_EQ(cli::cli_default_threads(), 10u);
  ::setenv("BPANN_THREADS", "3", 1);
  EXPECT_EQ(cli::cli_default_threads(), 3u);
  ::setenv("BPANN_THREADS", "zero", 1);
  EXPECT_EQ(cli::cli_default_threads(), 10u);
  ::unsetenv("BPANN_THREADS");
}

}  // namespace
}  // namespace bpann
