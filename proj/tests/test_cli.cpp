/*
Copyright 2026 The Zipper Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "zipper/cli.hpp"
#include "zipper/error.hpp"

using namespace zipper;
using nlohmann::json;

namespace {

struct Outcome {
  int code = 0;
  std::string out, err;
};

Outcome cli(std::vector<std::string> args) {
  args.insert(args.begin(), "zipper");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Outcome o;
  o.code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

/// Leading JSON document of the output.
json leading_json(const std::string& text) {
  std::istringstream in(text);
  json j;
  in >> j;
  return j;
}

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
  const auto p = std::filesystem::temp_directory_path() / ("zipper_test_" + name);
  std::ofstream(p) << contents;
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("compile prints the report and the listing") {
  const Outcome o = cli({"compile", "--model", "gcn"});
  REQUIRE(o.code == kExitOk);
  const json j = leading_json(o.out);
  CHECK(j["instructions"]["s"] == 4);
  CHECK(j["instructions"]["e"] == 5);
  CHECK(j["instructions"]["d"] == 7);
  CHECK(o.out.find("s_function:") != std::string::npos);
  CHECK(o.out.find("GTHR.DST.SUM") != std::string::npos);
}

TEST_CASE("compile without E2V keeps edge work") {
  const json with = leading_json(cli({"compile", "--model", "gat"}).out);
  const json without = leading_json(cli({"compile", "--model", "gat", "--no-e2v"}).out);
  CHECK(with["moved"].get<int>() >= 2);
  CHECK(without["moved"] == 0);
  CHECK(with["instructions"]["e"].get<int>() < without["instructions"]["e"].get<int>());
}

TEST_CASE("compile writes a binary program") {
  const auto bin = std::filesystem::temp_directory_path() / "zipper_test_gcn.zp";
  const auto lst = std::filesystem::temp_directory_path() / "zipper_test_gcn.lst";
  const Outcome o = cli({"compile", "--model", "gcn", "-o", bin.string(), "--listing", lst.string()});
  REQUIRE(o.code == kExitOk);
  CHECK(slurp(bin).rfind("ZIPR", 0) == 0);
  CHECK(slurp(lst).find("d_function:") != std::string::npos);
  CHECK(o.out.find("s_function:") == std::string::npos);
}

TEST_CASE("model files") {
  const auto p = temp_file("model.txt",
                           "x = input() [domain=vertex, dim=4]\nW = input() [domain=weight, shape=4x4]\n"
                           "m = scatter_src(x)\na = gather_max(m)\nh = matmul(a, W)\nout = output(h)\n");
  const Outcome o = cli({"verify", "--model", p.string(), "--synthetic", "rmat:128:512"});
  CHECK(o.code == kExitOk);
  CHECK(leading_json(o.out)["pass"] == true);
}

TEST_CASE("unknown model") {
  const Outcome o = cli({"compile", "--model", "nosuch"});
  CHECK(o.code == kExitUsage);
  CHECK(o.err.find("nosuch") != std::string::npos);
}

TEST_CASE("usage errors") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"run", "--synthetic", "rmat:64:128", "--streams", "0,1"}).code == kExitUsage);
  CHECK(cli({"run", "--synthetic", "bogus:64:128"}).code == kExitUsage);
  CHECK(cli({"run", "--tiling", "diagonal", "--synthetic", "rmat:64:128"}).code == kExitUsage);
}

TEST_CASE("verify passes on a random graph") {
  const Outcome o = cli({"verify", "--model", "gcn", "--synthetic", "rmat:256:2048", "--dst-size", "64"});
  REQUIRE(o.code == kExitOk);
  const json j = leading_json(o.out);
  CHECK(j["pass"] == true);
  CHECK(j["partitions"] == 4);
  CHECK(j["max_rel_err"].get<double>() <= 1e-5);
}

TEST_CASE("verify reports an injected deadlock") {
  const Outcome o = cli({"verify", "--model", "gcn", "--synthetic", "rmat:256:2048", "--inject-drop-signal"});
  CHECK(o.code == kExitVerifyFailed);
  CHECK(o.err.find("d -> e -> s -> d") != std::string::npos);
}

TEST_CASE("verify on a graph without edges") {
  const auto p = temp_file("noedges.mtx", "%%MatrixMarket matrix coordinate pattern general\n8 8 0\n");
  const Outcome o = cli({"verify", "--graph", p.string(), "--format", "mtx", "--model", "sage"});
  CHECK(o.code == kExitOk);
  CHECK(leading_json(o.out)["pass"] == true);
}

TEST_CASE("verify in double precision") {
  const Outcome o = cli({"verify", "--model", "ggnn", "--synthetic", "er:128:512", "--double", "--tolerance", "1e-12"});
  CHECK(o.code == kExitOk);
}

TEST_CASE("run is deterministic") {
  const std::vector<std::string> args{"run", "--model", "gat", "--synthetic", "rmat:256:2048", "--streams", "2,2"};
  const Outcome a = cli(args), b = cli(args);
  REQUIRE(a.code == kExitOk);
  CHECK(a.out == b.out);
  const json j = leading_json(a.out);
  CHECK(j["stats"]["total_cycles"].get<std::uint64_t>() > 0);
  CHECK(j["energy"]["total_pj"].get<double>() > 0);
}

TEST_CASE("run stats agree with the traffic model") {
  const json j = leading_json(cli({"run", "--model", "gcn", "--synthetic", "rmat:512:4096", "--dst-size", "128"}).out);
  const auto s = j["stats"];
  CHECK(s["offchip_read_bytes"].get<std::uint64_t>() + s["offchip_write_bytes"].get<std::uint64_t>() ==
        j["traffic"]["total_bytes"].get<std::uint64_t>());
}

TEST_CASE("more streams on many tiles") {
  const std::vector<std::string> base{"run", "--model", "gcn", "--synthetic", "rmat:1024:8192", "--dst-size", "256",
                                      "--src-size", "128"};
  auto with = [&](const char* s) {
    auto args = base;
    args.insert(args.end(), {"--streams", s});
    const json j = leading_json(cli(args).out);
    CHECK(j["plan"]["tiles"].get<int>() >= 16);
    return j["stats"]["total_cycles"].get<std::uint64_t>();
  };
  CHECK(with("4,4") < with("1,1"));
}

TEST_CASE("sparse reordered tiling reads less than regular") {
  auto reads = [](std::vector<std::string> extra) {
    std::vector<std::string> args{"run", "--model", "gcn", "--synthetic", "rmat:2048:16384", "--dst-size", "256",
                                  "--src-size", "64"};
    args.insert(args.end(), extra.begin(), extra.end());
    return leading_json(cli(args).out)["stats"]["offchip_read_bytes"].get<std::uint64_t>();
  };
  CHECK(reads({"--tiling", "sparse", "--reorder"}) <= reads({"--tiling", "regular"}));
}

TEST_CASE("run writes stats and utilization files") {
  const auto stats = std::filesystem::temp_directory_path() / "zipper_test_stats.json";
  const auto csv = std::filesystem::temp_directory_path() / "zipper_test_util.csv";
  const Outcome o = cli({"run", "--synthetic", "rmat:128:512", "-o", stats.string(), "--csv", csv.string(),
                         "--window", "100"});
  REQUIRE(o.code == kExitOk);
  CHECK(json::parse(slurp(stats)).contains("stats"));
  CHECK(slurp(csv).rfind("cycle,mu,vu,mem\n", 0) == 0);
}

TEST_CASE("config file with flag overrides") {
  const auto cfg = temp_file("config.json",
                             R"({"model": "sage", "synthetic": "rmat:128:1024", "streams": [2, 3],
                                 "dst_size": 32, "hw": {"mu_count": 2}})");
  const json a = leading_json(cli({"--config", cfg.string(), "run"}).out);
  CHECK(a["config"]["model"] == "sage");
  CHECK(a["config"]["streams"] == json::array({2, 3}));
  CHECK(a["config"]["hw"]["mu_count"] == 2);
  CHECK(a["plan"]["partitions"] == 4);
  const json b = leading_json(cli({"--config", cfg.string(), "run", "--model", "gcn"}).out);
  CHECK(b["config"]["model"] == "gcn");
  CHECK(b["config"]["streams"] == json::array({2, 3}));

  const auto bad = temp_file("bad.json", R"({"modle": "gcn"})");
  CHECK(cli({"--config", bad.string(), "run"}).code == kExitUsage);
}

TEST_CASE("run config json round trip") {
  RunConfig c;
  c.model = "gat";
  c.streams = {3, 5};
  c.hw.vu_count = 4;
  c.reorder = true;
  const RunConfig back = run_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK_THROWS_AS(run_config_from_json(R"({"streams": [1]})"), ParameterError);
}

TEST_CASE("capacity errors exit with their own code") {
  const auto hw = temp_file("tiny.json", R"({"tilehub_bytes": 64})");
  const Outcome o = cli({"run", "--synthetic", "rmat:256:4096", "--dst-size", "256", "--hw", hw.string()});
  CHECK(o.code == kExitCapacity);
  CHECK(o.err.find("capacity") != std::string::npos);
}

TEST_CASE("sweep table") {
  const Outcome o = cli({"sweep", "--model", "gcn", "--synthetic", "rmat:512:4096", "--dst-size", "128",
                         "--stream-grid", "1,2,4", "--same-streams"});
  REQUIRE(o.code == kExitOk);
  std::istringstream in(o.out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "n_s,n_e,mu,vu,cycles,normalized,error");
  std::vector<double> cycles;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cols.push_back(c);
    REQUIRE(cols.size() >= 6);
    cycles.push_back(std::stod(cols[4]));
  }
  REQUIRE(cycles.size() == 3);
  CHECK(cycles[1] <= cycles[0]);
  CHECK(cycles[2] <= cycles[1]);

  const Outcome serial = cli({"sweep", "--model", "gcn", "--synthetic", "rmat:512:4096", "--stream-grid", "1",
                              "--mu-grid", "1", "--vu-grid", "2"});
  CHECK(serial.out.find("1,1,1,2,") != std::string::npos);
  CHECK(serial.out.find(",1,\n") != std::string::npos);
}

TEST_CASE("sweep keeps going after a failing cell") {
  const Outcome o = cli({"sweep", "--model", "gcn", "--synthetic", "rmat:128:512", "--stream-grid", "1",
                         "--mu-grid", "0,1"});
  CHECK(o.code == kExitOk);
  std::istringstream in(o.out);
  std::string header, bad, good;
  std::getline(in, header);
  std::getline(in, bad);
  std::getline(in, good);
  CHECK(bad.find('"') != std::string::npos);
  CHECK(good.rfind("1,1,1,", 0) == 0);
}
