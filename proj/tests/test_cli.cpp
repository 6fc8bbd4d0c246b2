#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "manin/cli/cache.hpp"
#include "manin/cli/commands.hpp"
#include "manin/cli/config.hpp"
#include "manin/errors.hpp"

using namespace manin;
using namespace manin::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("manin_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

struct Invocation {
  int code = -1;
  std::string out, err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "manin");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  Invocation r;
  r.code = main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> lines_of(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("canonical values") {
  CHECK(canonical_value("4/2") == "2");
  CHECK(canonical_value("2") == "2");
  CHECK(canonical_value("+2") == "2");
  CHECK(canonical_value("2.0") == "2");
  CHECK(canonical_value("0.0125") == "1/80");
  CHECK(canonical_value("2.0125") == "161/80");
  CHECK(canonical_value("-1.5") == "-3/2");
  CHECK(canonical_value(" 2.5, 5/2 ,3") == "5/2,5/2,3");
  CHECK(canonical_value("010") == "10");
  CHECK(canonical_value("[[2, -1], [-1, 2]]") == "[[2,-1],[-1,2]]");
  CHECK(canonical_value("adjoint") == "adjoint");
  CHECK(canonical_value("1/0") == "1/0");
}

TEST_CASE("canonical params: equivalent spellings share one digest") {
  std::map<std::string, std::string> a{{"s", "2.5"}, {"primes", "2,3"}};
  std::map<std::string, std::string> b{{"primes", " 2, 3"}, {"s", "5/2"}};
  CHECK(canonical_params(Subcommand::Zeta, a) == canonical_params(Subcommand::Zeta, b));
  CHECK(canonical_params(Subcommand::Zeta, a) != canonical_params(Subcommand::Count, a));
  std::map<std::string, std::string> c{{"s", "2.25"}, {"primes", "2,3"}};
  CHECK(canonical_params(Subcommand::Zeta, a) != canonical_params(Subcommand::Zeta, c));
}

TEST_CASE("list parsing") {
  CHECK(parse_u64_list("64, 128,256") == std::vector<std::uint64_t>{64, 128, 256});
  CHECK_THROWS_AS(parse_u64_list("1,x"), ConfigError);
  CHECK_THROWS_AS(parse_u64_list("-3"), ConfigError);
  CHECK_THROWS_AS(parse_u64_list("1.5"), ConfigError);
  CHECK(split_list("a, b ,c") == std::vector<std::string>{"a", "b", "c"});
  std::map<std::string, std::string> p{{"x", "3/2"}, {"n", "7"}, {"bad", "seven"}};
  CHECK(param_double(p, "x", 0) == 1.5);
  CHECK(param_int(p, "n", 0) == 7);
  CHECK(param_int(p, "missing", 11) == 11);
  CHECK_THROWS_AS(param_int(p, "bad", 0), ConfigError);
  CHECK_THROWS_AS(param_int(p, "x", 0), ConfigError);
}

TEST_CASE("config validation") {
  ExperimentConfig cfg;
  cfg.subcommand = Subcommand::Count;
  cfg.parameters = {{"target", "pgl2-adjoint"}, {"T", "10"}};
  CHECK_NOTHROW(validate(cfg));
  cfg.grid = {10, 5};
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg.grid = {};
  cfg.threads = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg.threads = 1;
  cfg.parameters["bogus"] = "1";
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  CHECK_THROWS_AS(parse_subcommand("frobnicate"), ConfigError);
  for (auto s : {Subcommand::Invariants, Subcommand::Count, Subcommand::Zeta, Subcommand::Fit, Subcommand::MixingProbe,
                 Subcommand::Equidist})
    CHECK(parse_subcommand(subcommand_name(s)) == s);
}

TEST_CASE("config files") {
  TempDir tmp;
  const auto path = tmp.file("cfg.json");
  std::ofstream(path) << R"({"subcommand": "count", "parameters": {"target": "projective:1", "T": 50},
                            "grid": [], "threads": 2, "seed": 5})";
  auto cfg = load_config_file(path);
  CHECK(cfg.subcommand == Subcommand::Count);
  CHECK(cfg.parameters.at("T") == "50");
  CHECK(cfg.threads == 2);
  CHECK(cfg.seed == 5);

  std::ofstream(tmp.file("bad.json")) << "{not json";
  CHECK_THROWS_AS(load_config_file(tmp.file("bad.json")), ConfigError);
  std::ofstream(tmp.file("nosub.json")) << "{}";
  CHECK_THROWS_AS(load_config_file(tmp.file("nosub.json")), ConfigError);
  CHECK_THROWS_AS(load_config_file(tmp.file("missing.json")), ConfigError);
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("cache insert, lookup and reload") {
  TempDir tmp;
  const auto path = tmp.file("cache.jsonl");
  auto rec = make_record("{\"x\":1}", {{"N", 42}});
  CHECK(rec.params_digest == sha256_hex("{\"x\":1}"));
  CHECK(rec.tool_version == tool_version());
  CHECK(rec.created_at.size() == 20);
  {
    ResultCache c(path);
    CHECK(c.size() == 0);
    CHECK_FALSE(c.lookup(rec.params_digest));
    c.insert(rec);
    CHECK(c.lookup(rec.params_digest)->payload == rec.payload);
  }
  ResultCache again(path);
  CHECK(again.size() == 1);
  CHECK(again.lookup(rec.params_digest)->payload.at("N") == 42);
  CHECK_FALSE(again.lookup(sha256_hex("other")));
}

TEST_CASE("cache: other tool versions are ignored unless stale results are allowed") {
  TempDir tmp;
  const auto path = tmp.file("cache.jsonl");
  auto rec = make_record("p", {{"N", 1}});
  nlohmann::json j{{"digest", rec.params_digest},
                   {"params", rec.params},
                   {"payload", rec.payload},
                   {"created_at", rec.created_at},
                   {"tool_version", "0.0.0-old"}};
  std::ofstream(path) << j.dump() << "\n";
  ResultCache c(path);
  CHECK_FALSE(c.lookup(rec.params_digest));
  CHECK(c.lookup(rec.params_digest, true)->tool_version == "0.0.0-old");
}

TEST_CASE("cache: malformed lines are skipped and counted") {
  TempDir tmp;
  const auto path = tmp.file("cache.jsonl");
  auto rec = make_record("p", {{"N", 1}});
  {
    ResultCache c(path);
    c.insert(rec);
  }
  std::ofstream(path, std::ios::app) << "{truncated\n\n{\"digest\": \"x\"}\n";
  ResultCache c(path);
  CHECK(c.malformed_lines() == 2);
  CHECK(c.warnings().size() == 2);
  CHECK(c.lookup(rec.params_digest));
}

TEST_CASE("cache: contradictions are corruption") {
  TempDir tmp;
  auto rec = make_record("p", {{"N", 1}});
  auto bad = rec;
  bad.payload = {{"N", 2}};
  {
    ResultCache c(tmp.file("conflict.jsonl"));
    c.insert(rec);
    c.insert(bad);
  }
  CHECK_THROWS_AS(ResultCache(tmp.file("conflict.jsonl")), CacheCorruption);

  auto wrong = rec;
  wrong.params = "q";
  {
    ResultCache c(tmp.file("digest.jsonl"));
    c.insert(wrong);
  }
  CHECK_THROWS_AS(ResultCache(tmp.file("digest.jsonl")), CacheCorruption);

  auto r = invoke({"--cache", tmp.file("digest.jsonl"), "count", "--target", "projective:1", "--T", "10"});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("cache corrupt") != std::string::npos);
}

TEST_CASE("a second identical run is served from the cache") {
  TempDir tmp;
  ExperimentConfig cfg;
  cfg.subcommand = Subcommand::Count;
  cfg.parameters = {{"target", "pgl2-adjoint"}, {"primes", "2,3"}};
  cfg.grid = {16, 32, 64, 128};
  cfg.cache_path = tmp.file("cache.jsonl");
  std::ostringstream t1, t2;
  RunOutput first, second;
  {
    ResultCache c(cfg.cache_path);
    first = run(cfg, c, t1);
  }
  CHECK(first.computed == 4);
  CHECK(first.cache_hits == 0);
  CHECK(lines_of(cfg.cache_path).size() == 4);
  {
    ResultCache c(cfg.cache_path);
    second = run(cfg, c, t2);
  }
  CHECK(second.computed == 0);
  CHECK(second.cache_hits == 4);
  REQUIRE(second.records.size() == first.records.size());
  for (std::size_t i = 0; i < first.records.size(); ++i) CHECK(second.records[i].payload == first.records[i].payload);
  CHECK(t1.str() == t2.str());
  CHECK(lines_of(cfg.cache_path).size() == 4);

  // thread count is not part of the digest
  cfg.threads = 2;
  ResultCache c(cfg.cache_path);
  std::ostringstream t3;
  CHECK(run(cfg, c, t3).cache_hits == 4);
}

TEST_CASE("fit reuses cached counts and audit recomputes") {
  TempDir tmp;
  const auto cache = tmp.file("cache.jsonl");
  ExperimentConfig count;
  count.subcommand = Subcommand::Count;
  count.parameters = {{"target", "projective:1"}};
  count.grid = {16, 32, 64, 128, 256, 1024};
  count.cache_path = cache;
  {
    ResultCache c(cache);
    std::ostringstream t;
    run(count, c, t);
  }
  ExperimentConfig fit;
  fit.subcommand = Subcommand::Fit;
  fit.parameters = {{"target", "projective:1"}};
  fit.grid = count.grid;
  fit.cache_path = cache;
  fit.audit_every = 1;
  ResultCache c(cache);
  std::ostringstream t;
  auto out = run(fit, c, t);
  CHECK(out.computed == 1);  // the fit record itself
  CHECK(out.cache_hits == 6);
  CHECK(out.audited == 6);
  const auto& p = out.records.at(0).payload;
  CHECK(p.at("a").get<std::string>() == "2");
  CHECK(p.at("a_hat").get<double>() == doctest::Approx(2.0).epsilon(0.02));
  // primitive pairs mod sign: N ~ (12 / pi^2) T^2
  CHECK(p.at("c_hat").get<double>() == doctest::Approx(12 / (M_PI * M_PI)).epsilon(0.05));
}

TEST_CASE("audit detects a tampered cache") {
  TempDir tmp;
  const auto cache = tmp.file("cache.jsonl");
  ExperimentConfig cfg;
  cfg.subcommand = Subcommand::Count;
  cfg.parameters = {{"target", "projective:1"}, {"T", "20"}};
  const auto canon = canonical_params(cfg.subcommand, cfg.parameters);
  {
    ResultCache c(cache);
    auto payload = compute_payload(cfg.subcommand, cfg.parameters);
    payload["N"] = payload["N"].get<std::uint64_t>() + 1;
    c.insert(make_record(canon, payload));
  }
  cfg.cache_path = cache;
  ResultCache c(cache);
  std::ostringstream t;
  auto plain = run(cfg, c, t);
  CHECK(plain.cache_hits == 1);
  cfg.audit_every = 1;
  CHECK_THROWS_AS(run(cfg, c, t), InvariantViolation);
  auto r = invoke({"--cache", cache, "--audit", "1", "count", "--target", "projective:1", "--T", "20"});
  CHECK(r.code == kExitInvariant);
}

TEST_CASE("command line: invariants and exit codes") {
  auto ok = invoke({"--json", "invariants", "--type", "A3", "--weight", "adjoint"});
  REQUIRE(ok.code == kExitOk);
  auto j = nlohmann::json::parse(ok.out);
  CHECK(j.at("a") == "5");
  CHECK(j.at("b") == 1);
  CHECK(j.at("delta") == nlohmann::json::array({2}));

  auto table = invoke({"invariants", "--type", "A1xA1", "--weight", "[1,2]"});
  CHECK(table.code == kExitOk);
  CHECK_FALSE(table.out.empty());

  CHECK(invoke({"invariants", "--type", "A2", "--weight", "[0,-1]"}).code == kExitConfig);
  CHECK(invoke({"invariants", "--cartan", "[[2,1],[-1,2]]", "--weight", "[1,1]"}).code == kExitConfig);
  CHECK(invoke({"count", "--target", "nonsense", "--T", "5"}).code == kExitConfig);
  CHECK(invoke({"count", "--target", "pgl2-adjoint"}).code == kExitConfig);
  CHECK(invoke({"count", "--target", "pgl2-adjoint", "--T", "100000", "--max-work", "10"}).code == kExitResource);
  CHECK(invoke({"--grid", "8,4", "count", "--target", "projective:1"}).code == kExitConfig);
  CHECK(invoke({"--unknown-flag"}).code == kExitConfig);
  CHECK(invoke({}).code == kExitConfig);
  auto v = invoke({"--version"});
  CHECK(v.code == kExitOk);
  CHECK(v.out.find(tool_version()) != std::string::npos);
}

TEST_CASE("command line: zeta, count, mixing and equidist payloads") {
  auto z = invoke({"--json", "zeta", "--primes", "2,3", "--s", "2,2.5"});
  REQUIRE(z.code == kExitOk);
  auto zj = nlohmann::json::parse(z.out);
  CHECK(zj["local_factors"][0]["value_at"]["2"] == "5/2");
  CHECK(zj["local_factors"][1]["value_at"]["2"] == "5/3");
  CHECK(zj["local_factors"][0]["rational_function"] == "(1 + t)/(1 - 2t)");

  auto c = invoke({"--json", "count", "--target", "projective:2", "--T", "2"});
  REQUIRE(c.code == kExitOk);
  CHECK(nlohmann::json::parse(c.out).at("N") == 13);

  auto single = invoke({"--json", "count", "--target", "pgl2-adjoint", "--T", "2"});
  auto prod = invoke({"--json", "count", "--target", "product:1,1", "--T", "2"});
  REQUIRE(prod.code == kExitOk);
  const auto n1 = nlohmann::json::parse(single.out).at("N").get<std::uint64_t>();
  CHECK(nlohmann::json::parse(prod.out).at("N") == n1 * n1);

  auto m = invoke({"--json", "mixing-probe", "--prime", "2", "--max-exponent", "10", "--box", "3"});
  REQUIRE(m.code == kExitOk);
  auto mj = nlohmann::json::parse(m.out);
  CHECK(mj["box"]["lower_violations"] == 0);
  CHECK(mj["padic_table"][1]["xi_over_eta_pow"] == "4/3");

  auto e = invoke({"--json", "equidist", "--T", "256", "--primes", "2"});
  REQUIRE(e.code == kExitOk);
  auto ej = nlohmann::json::parse(e.out);
  CHECK(ej["primes"][0]["cells"][0]["model"] == "2/5");
}

TEST_CASE("command line: csv output") {
  TempDir tmp;
  const auto csv = tmp.file("out.csv");
  auto r = invoke({"--csv", csv, "--grid", "4,8,16", "count", "--target", "projective:1"});
  REQUIRE(r.code == kExitOk);
  auto lines = lines_of(csv);
  CHECK(lines.size() == 4);
}

TEST_CASE("implicit defaults share a digest with their explicit spelling") {
  TempDir tmp;
  const auto cache = tmp.file("cache.jsonl");
  REQUIRE(invoke({"--cache", cache, "--grid", "16,32", "count"}).code == kExitOk);
  auto r = invoke({"--cache", cache, "--grid", "16,32", "count", "--target", "pgl2-adjoint", "--primes", "2, 3"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.err.find("cached 2, computed 0") != std::string::npos);
  auto f = invoke({"--cache", cache, "--grid", "16,32,64,128,256,1024", "fit"});
  REQUIRE(f.code == kExitOk);
  CHECK(f.err.find("cached 2, computed 5") != std::string::npos);
}
