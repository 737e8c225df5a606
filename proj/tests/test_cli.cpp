#include <doctest.h>

#include <dcgen/cli.hpp>
#include <dcgen/corpus.hpp>
#include <dcgen/langmodel.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "support/oracles.hpp"

using namespace dcgen;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  int code = cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("dcgen_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Two interleaved themes so a tiny topic model has something to find.
std::string corpus_text() {
  const char* sea[] = {"ship", "sea", "sail", "port"};
  const char* law[] = {"vote", "law", "seat", "bill"};
  std::ostringstream os;
  for (int i = 0; i < 40; ++i) {
    const char** words = (i % 2 == 0) ? sea : law;
    os << "the " << words[i % 4] << " is in the " << words[(i + 1) % 4] << '\t';
    if (i % 5 == 0)
      os << "i do not know .";
    else
      os << "you take the " << words[(i + 2) % 4] << " .";
    os << '\n';
  }
  return os.str();
}

struct Fixture {
  fs::path dir;
  fs::path pairs;
};

// One fully trained model directory shared by every case in this file.
const Fixture& models() {
  static Fixture fx = [] {
    Fixture f;
    f.dir = fresh_dir("models");
    f.pairs = f.dir / "pairs.tsv";
    write_file(f.pairs, corpus_text());
    auto must = [](CliResult r, const char* what) {
      if (r.code != 0)
        throw std::runtime_error(std::string("fixture ") + what +
                                 " failed: " + r.err);
    };
    must(run_cli({"train-hmmlda", "--pairs", f.pairs.string(), "--model-dir",
                  f.dir.string(), "--topics", "2", "--classes", "2",
                  "--burn-in", "30", "--samples", "5", "--seed", "7"}),
         "train-hmmlda");
    must(run_cli({"build-sif", "--pairs", f.pairs.string(), "--model-dir",
                  f.dir.string(), "--dim", "8", "--seed", "11"}),
         "build-sif");
    must(run_cli({"train-lm", "--pairs", f.pairs.string(), "--model-dir",
                  f.dir.string(), "--order", "2", "--em-iterations", "3"}),
         "train-lm");
    return f;
  }();
  return fx;
}

std::vector<json> parse_jsonl(const fs::path& path) {
  std::ifstream in(path);
  std::vector<json> records;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) records.push_back(json::parse(line));
  return records;
}

CliResult decode_to(const fs::path& out_path, const std::string& alpha = "0",
                    const std::string& beta = "0",
                    const std::string& min_len = "1",
                    std::vector<std::string> extra = {}) {
  const Fixture& fx = models();
  std::vector<std::string> args = {
      "decode",      "--pairs",   fx.pairs.string(),
      "--model-dir", fx.dir.string(),
      "--alpha",     alpha,       "--beta",  beta,
      "--beam",      "5",         "--max-len", "8",
      "--min-len",   min_len,     "--lambda-lm", "0.6",
      "--out",       out_path.string()};
  args.insert(args.end(), extra.begin(), extra.end());
  return run_cli(std::move(args));
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 2, data errors exit 1") {
  CHECK(run_cli({"--help"}).code == 0);
  CHECK(run_cli({"--help"}).out.find("dcgen") != std::string::npos);
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({"decode"}).code == 2);  // missing required flags

  const Fixture& fx = models();
  CliResult r = run_cli({"decode", "--pairs", "/nonexistent/pairs.tsv",
                         "--model-dir", fx.dir.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("error:") != std::string::npos);
  CHECK(r.err.find("/nonexistent/pairs.tsv") != std::string::npos);
}

TEST_CASE("training writes the expected artifacts") {
  const Fixture& fx = models();
  for (const char* name :
       {"vocab.txt", "hmmlda.txt", "word_topic_stats.txt", "vectors.txt",
        "sif.txt", "ngram_forward.txt", "ngram_reverse.txt",
        "lexicon_forward.txt", "lexicon_reverse.txt"})
    CHECK(fs::exists(fx.dir / name));
}

TEST_CASE("decode emits sorted records matching a plain beam search") {
  const Fixture& fx = models();
  fs::path out = fx.dir / "decode_a.jsonl";
  CliResult r = decode_to(out);
  REQUIRE(r.code == 0);

  std::vector<json> records = parse_jsonl(out);
  std::vector<DialoguePair> pairs = load_pairs(fx.pairs, false);
  REQUIRE(records.size() == pairs.size());

  Vocabulary vocab = Vocabulary::load(fx.dir / "vocab.txt");
  NGramModel ngram = NGramModel::load((fx.dir / "ngram_forward.txt").string());
  LexicalTransTable lex = LexicalTransTable::load(
      (fx.dir / "lexicon_forward.txt").string(), vocab);
  MixtureLm lm(std::move(ngram), std::move(lex), 0.6);

  for (std::size_t i = 0; i < records.size(); ++i) {
    const json& rec = records[i];
    CHECK(rec.at("source").get<std::vector<std::string>>() == pairs[i].source);

    const json& cands = rec.at("candidates");
    REQUIRE(!cands.empty());
    std::vector<oracle::VanillaHyp> expected =
        oracle::vanilla_beam(lm, vocab.ids(pairs[i].source), 5, 8, 1);
    REQUIRE(cands.size() == expected.size());
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < expected.size(); ++k) {
      const json& c = cands[k];
      CHECK(c.at("tokens").get<std::vector<std::string>>() ==
            vocab.surface(expected[k].tokens));
      // dump/parse round-trips doubles exactly, so compare bitwise.
      CHECK(c.at("loglik").get<double>() == expected[k].loglik);
      CHECK(c.at("total").get<double>() == expected[k].loglik);
      CHECK(c.at("finished").get<bool>() == expected[k].finished);
      CHECK(c.at("total").get<double>() <= prev);
      prev = c.at("total").get<double>();
    }
  }
}

TEST_CASE("decode output is byte-identical across runs") {
  const Fixture& fx = models();
  fs::path a = fx.dir / "rep_a.jsonl";
  fs::path b = fx.dir / "rep_b.jsonl";
  REQUIRE(decode_to(a, "2", "1").code == 0);
  REQUIRE(decode_to(b, "2", "1").code == 0);
  std::string text = read_file(a);
  CHECK(!text.empty());
  CHECK(text == read_file(b));
}

TEST_CASE("nbest truncates the candidate list") {
  const Fixture& fx = models();
  fs::path out = fx.dir / "decode_nbest.jsonl";
  REQUIRE(decode_to(out, "0", "0", "1", {"--nbest", "2"}).code == 0);
  for (const json& rec : parse_jsonl(out)) {
    CHECK(rec.at("candidates").size() >= 1);
    CHECK(rec.at("candidates").size() <= 2);
  }
}

TEST_CASE("training refuses to overwrite artifacts unless forced") {
  fs::path dir = fresh_dir("overwrite");
  fs::path pairs = dir / "pairs.tsv";
  write_file(pairs, corpus_text());
  std::vector<std::string> base = {"train-lm",    "--pairs",
                                   pairs.string(), "--model-dir",
                                   dir.string(),   "--order",
                                   "2",            "--em-iterations",
                                   "1"};
  REQUIRE(run_cli(base).code == 0);

  CliResult again = run_cli(base);
  CHECK(again.code == 1);
  CHECK(again.err.find("refusing to overwrite") != std::string::npos);

  std::vector<std::string> forced = base;
  forced.push_back("--force");
  CHECK(run_cli(forced).code == 0);
}

TEST_CASE("config file supplies defaults and flags override them") {
  const Fixture& fx = models();
  fs::path cfg = fx.dir / "decode.ini";
  write_file(cfg, "[decode]\nmax-len = 2\nmin-len = 1\n");

  fs::path short_out = fx.dir / "cfg_short.jsonl";
  CliResult r = run_cli({"--config", cfg.string(), "decode", "--pairs",
                         fx.pairs.string(), "--model-dir", fx.dir.string(),
                         "--beam", "3", "--out", short_out.string()});
  REQUIRE(r.code == 0);
  for (const json& rec : parse_jsonl(short_out))
    for (const json& c : rec.at("candidates"))
      CHECK(c.at("tokens").size() <= 2);

  fs::path long_out = fx.dir / "cfg_long.jsonl";
  r = run_cli({"--config", cfg.string(), "decode", "--pairs",
               fx.pairs.string(), "--model-dir", fx.dir.string(), "--beam",
               "3", "--max-len", "4", "--min-len", "3", "--out",
               long_out.string()});
  REQUIRE(r.code == 0);
  for (const json& rec : parse_jsonl(long_out))
    for (const json& c : rec.at("candidates")) {
      CHECK(c.at("tokens").size() >= 3);
      CHECK(c.at("tokens").size() <= 4);
    }
}

TEST_CASE("rerank keeps order at lambda zero and attaches reverse scores") {
  const Fixture& fx = models();
  fs::path decoded = fx.dir / "to_rerank.jsonl";
  REQUIRE(decode_to(decoded).code == 0);
  std::vector<json> before = parse_jsonl(decoded);

  fs::path kept = fx.dir / "reranked_zero.jsonl";
  CliResult r = run_cli({"rerank", "--in", decoded.string(), "--model-dir",
                         fx.dir.string(), "--mmi-lambda", "0", "--lambda-lm",
                         "0.6", "--out", kept.string()});
  REQUIRE(r.code == 0);
  CHECK(r.err.find("leaves the order unchanged") != std::string::npos);
  std::vector<json> after = parse_jsonl(kept);
  REQUIRE(after.size() == before.size());
  for (std::size_t i = 0; i < after.size(); ++i) {
    const json& was = before[i].at("candidates");
    const json& now = after[i].at("candidates");
    REQUIRE(now.size() == was.size());
    for (std::size_t k = 0; k < now.size(); ++k) {
      CHECK(now[k].at("tokens") == was[k].at("tokens"));
      CHECK(now[k].contains("reverse_score"));
      CHECK(now[k].at("total") == was[k].at("total"));
    }
  }

  fs::path moved = fx.dir / "reranked_five.jsonl";
  r = run_cli({"rerank", "--in", decoded.string(), "--model-dir",
               fx.dir.string(), "--mmi-lambda", "5", "--lambda-lm", "0.6",
               "--out", moved.string()});
  REQUIRE(r.code == 0);
  for (const json& rec : parse_jsonl(moved)) {
    double prev = std::numeric_limits<double>::infinity();
    for (const json& c : rec.at("candidates")) {
      CHECK(c.contains("reverse_score"));
      CHECK(c.at("total").get<double>() <= prev);
      prev = c.at("total").get<double>();
    }
  }
}

TEST_CASE("eval reports the metric table and json") {
  const Fixture& fx = models();
  fs::path decoded = fx.dir / "to_eval.jsonl";
  // min-len 2 keeps bigrams in the pool so distinct-2 is well defined
  REQUIRE(decode_to(decoded, "0", "0", "2").code == 0);

  CliResult table = run_cli({"eval", "--in", decoded.string(), "--refs",
                             fx.pairs.string()});
  REQUIRE(table.code == 0);
  CHECK(table.out.find("distinct-1") != std::string::npos);
  CHECK(table.out.find("system") != std::string::npos);

  CliResult js = run_cli({"eval", "--in", decoded.string(), "--refs",
                          fx.pairs.string(), "--json", "--name", "base"});
  REQUIRE(js.code == 0);
  json parsed = json::parse(js.out);
  REQUIRE(parsed.contains("base"));
  CHECK(parsed["base"]["distinct1"]["ratio"].is_number());
  CHECK(parsed["base"]["bleu1"].is_number());
  CHECK(parsed["base"]["avg_len"].get<double>() > 0.0);
}

TEST_CASE("tune sweeps the requested grid") {
  const Fixture& fx = models();
  CliResult r = run_cli({"tune", "--pairs", fx.pairs.string(), "--model-dir",
                         fx.dir.string(), "--alpha-grid", "0,2", "--beta-grid",
                         "0", "--beam", "3", "--max-len", "4"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("alpha=0 beta=0") != std::string::npos);
  CHECK(r.out.find("alpha=2 beta=0") != std::string::npos);
}

TEST_CASE("diagnose lists stop and topic word tables") {
  const Fixture& fx = models();
  CliResult r = run_cli({"diagnose", "--model-dir", fx.dir.string(),
                         "--source", "the ship is in the port", "--per-topic",
                         "5", "--show", "10"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("stop words:") != std::string::npos);
  CHECK(r.out.find("topic words:") != std::string::npos);
}

TEST_CASE("repl answers each input line") {
  const Fixture& fx = models();
  std::istringstream input("the ship is in the sea\n");
  std::streambuf* old = std::cin.rdbuf(input.rdbuf());
  CliResult r = run_cli({"repl", "--model-dir", fx.dir.string(), "--beam",
                         "3", "--max-len", "6"});
  std::cin.rdbuf(old);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("total=") != std::string::npos);
  CHECK(r.err.find(">") != std::string::npos);
}

}  // TEST_SUITE
