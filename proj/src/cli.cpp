#include "dcgen/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dcgen/corpus.hpp"
#include "dcgen/decoder.hpp"
#include "dcgen/kernels.hpp"
#include "dcgen/langmodel.hpp"
#include "dcgen/metrics.hpp"
#include "dcgen/rng.hpp"
#include "dcgen/sif.hpp"
#include "dcgen/topic_syntax.hpp"

namespace dcgen::cli {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path require_file(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("no such file: " + path.string());
  return path;
}

void check_overwrite(const fs::path& path, bool force) {
  if (fs::exists(path) && !force)
    throw DataError("refusing to overwrite " + path.string() +
                    " (pass --force)");
}

// ---------------------------------------------------------------------------
// Shared option bundles

struct CorpusOpts {
  std::string pairs;
  std::string model_dir;
  bool raw = false;
  int min_count = 1;
  bool force = false;
};

void add_corpus_options(CLI::App* cmd, CorpusOpts& o, bool writer) {
  cmd->add_option("--pairs", o.pairs, "TSV file, one `source<TAB>target` per line")
      ->required();
  cmd->add_option("--model-dir", o.model_dir, "Directory holding model artifacts")
      ->required();
  cmd->add_flag("--raw", o.raw,
                "Run the pair file through the tokenizer instead of splitting on spaces");
  if (writer) {
    cmd->add_option("--min-count", o.min_count,
                    "Fold tokens seen fewer times than this into <unk>")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--force", o.force, "Overwrite existing model artifacts");
  }
}

struct DecodeOpts {
  std::string model_dir;
  double alpha = 5.0;
  double beta = 2.0;
  int beam = 10;
  int max_len = 25;
  int min_len = 3;
  int constraint_start = 2;
  double lambda_lm = 0.6;
  std::optional<double> ta_bias;
  int ta_words = 20;
  double mmi_lambda = 0.0;
  bool drop_forward = false;
  std::uint64_t seed = 0;
};

void add_decode_options(CLI::App* cmd, DecodeOpts& o) {
  cmd->add_option("--model-dir", o.model_dir, "Directory holding model artifacts")
      ->required();
  cmd->add_option("--alpha", o.alpha, "Topic-constraint weight")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--beta", o.beta, "Semantic-constraint weight")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--beam", o.beam, "Beam width")->check(CLI::PositiveNumber);
  cmd->add_option("--max-len", o.max_len, "Longest allowed response");
  cmd->add_option("--min-len", o.min_len, "Shortest allowed response");
  cmd->add_option("--constraint-start", o.constraint_start,
                  "Hypothesis length at which the constraint terms kick in");
  cmd->add_option("--lambda-lm", o.lambda_lm,
                  "N-gram weight in the n-gram/channel mixture")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--ta-bias", o.ta_bias,
                  "Additive log-prob bonus for dominant-topic words (baseline mode)");
  cmd->add_option("--ta-words", o.ta_words,
                  "Topic word set size for --ta-bias")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--mmi-lambda", o.mmi_lambda,
                  "Reverse-model weight; nonzero reranks candidates");
  cmd->add_flag("--drop-forward", o.drop_forward,
                "Rerank by the reverse score alone");
  cmd->add_option("--seed", o.seed, "Reserved; ranking is already deterministic");
}

DecoderConfig to_decoder_config(const DecodeOpts& o) {
  DecoderConfig config;
  config.beam_size = o.beam;
  config.alpha = o.alpha;
  config.beta = o.beta;
  config.max_len = o.max_len;
  config.min_len = o.min_len;
  config.constraint_start_step = o.constraint_start;
  if (o.ta_bias) config.ta_bias = TaBias{*o.ta_bias, o.ta_words};
  config.mmi_lambda = o.mmi_lambda;
  config.mmi_keep_forward = !o.drop_forward;
  config.seed = o.seed;
  config.validate();
  return config;
}

// ---------------------------------------------------------------------------
// Artifact plumbing

std::unordered_map<std::string, double> unigram_table(const Vocabulary& vocab) {
  std::unordered_map<std::string, double> table;
  table.reserve(static_cast<std::size_t>(vocab.size()));
  for (int w = 0; w < vocab.size(); ++w) table[vocab.token(w)] = vocab.unigram(w);
  return table;
}

Vocabulary load_or_build_vocab(const fs::path& dir,
                               const std::vector<DialoguePair>& pairs,
                               int min_count, std::ostream& err) {
  fs::path path = dir / "vocab.txt";
  if (fs::exists(path)) return Vocabulary::load(path);
  Vocabulary vocab = Vocabulary::build(pairs, min_count);
  fs::create_directories(dir);
  vocab.save(path);
  err << "wrote " << path.string() << " (" << vocab.size() << " tokens)\n";
  return vocab;
}

std::unordered_set<std::string> stop_set_from(const std::string& path) {
  if (path.empty()) return to_set(default_stopwords());
  return to_set(load_stopwords(require_file(path)));
}

// Everything decode-like commands need in memory.
struct LoadedModels {
  Vocabulary vocab;
  WordTopicStats stats;  // empty when no topic model was trained
  SifModel sif;          // default when no embedding model was built
  MixtureLm forward;
  std::optional<MixtureLm> reverse;
  std::optional<std::vector<std::vector<int>>> ta_sets;
};

std::vector<std::vector<int>> topic_word_sets(const HmmLdaState& state,
                                              int per_topic) {
  std::vector<std::vector<int>> sets(static_cast<std::size_t>(state.topics()));
  std::vector<std::pair<long long, int>> ranked;
  for (int z = 0; z < state.topics(); ++z) {
    ranked.clear();
    for (int w = 0; w < state.vocab_size(); ++w) {
      long long c = state.topic_word(z, w);
      if (c > 0) ranked.emplace_back(c, w);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    auto& set = sets[static_cast<std::size_t>(z)];
    for (std::size_t i = 0; i < ranked.size() &&
                            i < static_cast<std::size_t>(per_topic); ++i)
      set.push_back(ranked[i].second);
  }
  return sets;
}

LoadedModels load_models(const DecodeOpts& o, bool need_reverse) {
  fs::path dir(o.model_dir);
  LoadedModels m{Vocabulary::load(require_file(dir / "vocab.txt")),
                 WordTopicStats{},
                 SifModel{},
                 MixtureLm{},
                 std::nullopt,
                 std::nullopt};

  if (fs::exists(dir / "word_topic_stats.txt"))
    m.stats = WordTopicStats::load((dir / "word_topic_stats.txt").string());
  if (fs::exists(dir / "sif.txt"))
    m.sif = SifModel::load((dir / "sif.txt").string(), unigram_table(m.vocab));

  NGramModel fwd_ngram =
      NGramModel::load(require_file(dir / "ngram_forward.txt").string());
  LexicalTransTable fwd_lex = LexicalTransTable::load(
      require_file(dir / "lexicon_forward.txt").string(), m.vocab);
  m.forward = MixtureLm(std::move(fwd_ngram), std::move(fwd_lex), o.lambda_lm);

  if (need_reverse) {
    NGramModel rev_ngram =
        NGramModel::load(require_file(dir / "ngram_reverse.txt").string());
    LexicalTransTable rev_lex = LexicalTransTable::load(
        require_file(dir / "lexicon_reverse.txt").string(), m.vocab);
    m.reverse = MixtureLm(std::move(rev_ngram), std::move(rev_lex), o.lambda_lm);
  }

  if (o.ta_bias) {
    HmmLdaState state =
        HmmLdaState::load(require_file(dir / "hmmlda.txt").string());
    if (state.vocab_size() != m.vocab.size())
      throw DataError("hmmlda.txt vocabulary size does not match vocab.txt");
    m.ta_sets = topic_word_sets(state, o.ta_words);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Decode plumbing shared by decode, tune and repl

std::vector<Candidate> decode_one(const TokenSeq& source, const LoadedModels& m,
                                  const DecoderConfig& config) {
  SourceContext ctx = build_context(
      source, m.stats, m.sif, m.vocab, config,
      m.ta_sets ? &*m.ta_sets : nullptr);
  std::vector<Candidate> cands = beam_search(m.forward, ctx, config);
  if (config.mmi_lambda != 0.0 && !cands.empty()) {
    if (!m.reverse) throw DataError("mmi reranking needs the reverse model");
    cands = mmi_rerank(std::move(cands), ctx.source_ids(), *m.reverse,
                       config.mmi_lambda, config.mmi_keep_forward);
  }
  return cands;
}

ordered_json candidate_json(const Candidate& c, const Vocabulary& vocab) {
  ordered_json j;
  j["tokens"] = vocab.surface(c.tokens);
  j["loglik"] = c.loglik;
  j["topic_score"] = c.topic_score;
  j["semantic_score"] = c.semantic_score;
  if (c.reranked) j["reverse_score"] = c.reverse_score;
  j["total"] = c.total;
  j["finished"] = c.finished;
  return j;
}

std::string record_json(const TokenSeq& source,
                        const std::vector<Candidate>& cands,
                        const Vocabulary& vocab, int nbest) {
  ordered_json rec;
  rec["source"] = source;
  ordered_json arr = ordered_json::array();
  std::size_t limit = nbest > 0 ? static_cast<std::size_t>(nbest) : cands.size();
  for (std::size_t i = 0; i < cands.size() && i < limit; ++i)
    arr.push_back(candidate_json(cands[i], vocab));
  rec["candidates"] = std::move(arr);
  return rec.dump();
}

std::vector<std::string> decode_lines(const std::vector<TokenSeq>& sources,
                                      const LoadedModels& m,
                                      const DecoderConfig& config, int nbest,
                                      int jobs) {
  std::vector<std::string> lines(sources.size());
  kernels::parallel_for(sources.size(), jobs, [&](std::size_t i) {
    lines[i] = record_json(sources[i], decode_one(sources[i], m, config),
                           m.vocab, nbest);
  });
  return lines;
}

// Top response of every decoded line, for the metric commands.
std::vector<TokenSeq> top_responses(const std::vector<TokenSeq>& sources,
                                    const LoadedModels& m,
                                    const DecoderConfig& config, int jobs) {
  std::vector<TokenSeq> responses(sources.size());
  kernels::parallel_for(sources.size(), jobs, [&](std::size_t i) {
    std::vector<Candidate> cands = decode_one(sources[i], m, config);
    if (!cands.empty()) responses[i] = m.vocab.surface(cands.front().tokens);
  });
  return responses;
}

std::ostream& open_output(std::ofstream& file, const std::string& path,
                          std::ostream& fallback) {
  if (path.empty() || path == "-") return fallback;
  file.open(path);
  if (!file) throw DataError("cannot write " + path);
  return file;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_train_hmmlda(const CorpusOpts& c, HmmLdaConfig cfg,
                     std::optional<double> alpha_t, std::ostream& err) {
  std::vector<DialoguePair> pairs = load_pairs(require_file(c.pairs), c.raw);
  fs::path dir(c.model_dir);
  check_overwrite(dir / "hmmlda.txt", c.force);
  check_overwrite(dir / "word_topic_stats.txt", c.force);
  Vocabulary vocab = load_or_build_vocab(dir, pairs, c.min_count, err);

  // Without an explicit prior, fall back to the usual 50/K heuristic.
  cfg.alpha_t = alpha_t ? *alpha_t : 50.0 / cfg.topics;

  std::vector<Document> docs;
  docs.reserve(pairs.size());
  for (const DialoguePair& p : pairs) docs.push_back({p.source, p.target});

  auto [state, stats] = train_hmmlda(cfg, docs, vocab);
  state.save((dir / "hmmlda.txt").string());
  stats.save((dir / "word_topic_stats.txt").string());
  err << "trained syntax-topic model: K=" << cfg.topics << " C=" << cfg.classes
      << " V=" << vocab.size() << " tokens=" << state.token_count()
      << " sweeps=" << state.sweeps_done() << '\n';
  return 0;
}

int cmd_build_sif(const CorpusOpts& c, const std::string& vectors_path, int dim,
                  double a, std::uint64_t seed, int threads, std::ostream& err) {
  std::vector<DialoguePair> pairs = load_pairs(require_file(c.pairs), c.raw);
  fs::path dir(c.model_dir);
  check_overwrite(dir / "vectors.txt", c.force);
  check_overwrite(dir / "sif.txt", c.force);
  Vocabulary vocab = load_or_build_vocab(dir, pairs, c.min_count, err);

  WordVectors vectors;
  if (!vectors_path.empty()) {
    vectors = WordVectors::load(require_file(vectors_path).string());
  } else {
    // Deterministic random unit vectors for every non-reserved word. These
    // carry no distributional signal but exercise the whole pipeline.
    Rng rng(seed);
    for (int w = 0; w < vocab.size(); ++w) {
      if (w == Vocabulary::kUnkId || w == Vocabulary::kBosId ||
          w == Vocabulary::kEosId || w == Vocabulary::kNullId)
        continue;
      std::vector<double> v(static_cast<std::size_t>(dim));
      double norm = 0.0;
      for (double& x : v) {
        x = rng.gaussian();
        norm += x * x;
      }
      norm = std::sqrt(norm);
      if (norm == 0.0) {
        v[0] = 1.0;
        norm = 1.0;
      }
      for (double& x : v) x /= norm;
      vectors.add(vocab.token(w), v);
    }
  }

  std::vector<TokenSeq> sentences;
  sentences.reserve(pairs.size() * 2);
  for (const DialoguePair& p : pairs) {
    sentences.push_back(p.source);
    sentences.push_back(p.target);
  }

  SifModel model = fit_sif(std::move(vectors), unigram_table(vocab), sentences,
                           a, threads);
  fs::create_directories(dir);
  model.vectors.save((dir / "vectors.txt").string());
  model.save((dir / "sif.txt").string(), "vectors.txt");
  err << "built sif model: d=" << model.dim() << " a=" << model.a
      << " words=" << model.vectors.size() << '\n';
  return 0;
}

int cmd_train_lm(const CorpusOpts& c, int order, double discount, int em_iters,
                 int threads, std::ostream& err) {
  std::vector<DialoguePair> pairs = load_pairs(require_file(c.pairs), c.raw);
  fs::path dir(c.model_dir);
  for (const char* name : {"ngram_forward.txt", "ngram_reverse.txt",
                           "lexicon_forward.txt", "lexicon_reverse.txt"})
    check_overwrite(dir / name, c.force);
  Vocabulary vocab = load_or_build_vocab(dir, pairs, c.min_count, err);

  std::vector<TokenSeq> sources;
  std::vector<TokenSeq> targets;
  std::vector<DialoguePair> flipped;
  sources.reserve(pairs.size());
  targets.reserve(pairs.size());
  flipped.reserve(pairs.size());
  for (const DialoguePair& p : pairs) {
    sources.push_back(p.source);
    targets.push_back(p.target);
    flipped.push_back({p.target, p.source});
  }

  NGramModel fwd = train_ngram(targets, vocab, order, discount);
  NGramModel rev = train_ngram(sources, vocab, order, discount);
  LexicalTransTable fwd_lex = train_ibm1(pairs, vocab, em_iters, threads);
  LexicalTransTable rev_lex = train_ibm1(flipped, vocab, em_iters, threads);

  fwd.save((dir / "ngram_forward.txt").string());
  rev.save((dir / "ngram_reverse.txt").string());
  fwd_lex.save((dir / "lexicon_forward.txt").string(), vocab);
  rev_lex.save((dir / "lexicon_reverse.txt").string(), vocab);
  err << "trained language models: order=" << order << " pairs=" << pairs.size()
      << " em_iterations=" << em_iters << '\n';
  return 0;
}

int cmd_decode(const CorpusOpts& c, const DecodeOpts& o, int nbest, int jobs,
               const std::string& out_path, std::ostream& out,
               std::ostream& err) {
  std::vector<DialoguePair> pairs = load_pairs(require_file(c.pairs), c.raw);
  DecoderConfig config = to_decoder_config(o);
  LoadedModels m = load_models(o, config.mmi_lambda != 0.0);

  std::vector<TokenSeq> sources;
  sources.reserve(pairs.size());
  for (const DialoguePair& p : pairs) sources.push_back(p.source);

  std::vector<std::string> lines = decode_lines(sources, m, config, nbest, jobs);
  std::ofstream file;
  std::ostream& sink = open_output(file, out_path, out);
  for (const std::string& line : lines) sink << line << '\n';
  err << "decoded " << lines.size() << " inputs\n";
  return 0;
}

std::vector<ordered_json> read_jsonl(const fs::path& path) {
  std::ifstream in(require_file(path));
  std::vector<ordered_json> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json rec = ordered_json::parse(line, nullptr, false);
    if (rec.is_discarded())
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": not valid JSON");
    records.push_back(std::move(rec));
  }
  return records;
}

TokenSeq tokens_of(const ordered_json& j) {
  TokenSeq tokens;
  for (const auto& t : j) tokens.push_back(t.get<std::string>());
  return tokens;
}

int cmd_rerank(const std::string& in_path, const DecodeOpts& o,
               const std::string& out_path, std::ostream& out,
               std::ostream& err) {
  if (o.mmi_lambda == 0.0 && !o.drop_forward)
    err << "note: --mmi-lambda 0 leaves the order unchanged\n";
  LoadedModels m = load_models(o, true);

  std::vector<ordered_json> records = read_jsonl(in_path);
  std::ofstream file;
  std::ostream& sink = open_output(file, out_path, out);
  for (ordered_json& rec : records) {
    TokenSeq source = tokens_of(rec.at("source"));
    std::vector<int> source_ids = m.vocab.ids(source);
    std::vector<Candidate> cands;
    for (const auto& cj : rec.at("candidates")) {
      Candidate c;
      c.tokens = m.vocab.ids(tokens_of(cj.at("tokens")));
      c.loglik = cj.at("loglik").get<double>();
      c.topic_score = cj.value("topic_score", 0.0);
      c.semantic_score = cj.value("semantic_score", 0.0);
      c.total = cj.at("total").get<double>();
      c.finished = cj.value("finished", true);
      cands.push_back(std::move(c));
    }
    if (!cands.empty())
      cands = mmi_rerank(std::move(cands), source_ids, *m.reverse,
                         o.mmi_lambda, !o.drop_forward);
    sink << record_json(source, cands, m.vocab, 0) << '\n';
  }
  err << "reranked " << records.size() << " records\n";
  return 0;
}

int cmd_eval(const std::string& in_path, const std::string& refs_path, bool raw,
             const std::string& stop_path, bool as_json, const std::string& name,
             std::ostream& out) {
  std::vector<ordered_json> records = read_jsonl(in_path);
  std::vector<TokenSeq> responses;
  responses.reserve(records.size());
  for (const ordered_json& rec : records) {
    const auto& cands = rec.at("candidates");
    if (cands.empty()) {
      responses.emplace_back();
      continue;
    }
    responses.push_back(tokens_of(cands.front().at("tokens")));
  }

  std::vector<TokenSeq> references;
  if (!refs_path.empty()) {
    std::vector<DialoguePair> pairs = load_pairs(require_file(refs_path), raw);
    if (pairs.size() != responses.size())
      throw DataError("reference count (" + std::to_string(pairs.size()) +
                      ") does not match response count (" +
                      std::to_string(responses.size()) + ")");
    references.reserve(pairs.size());
    for (DialoguePair& p : pairs) references.push_back(std::move(p.target));
  }

  MetricsReport report =
      compute_report(responses, references, stop_set_from(stop_path));
  if (as_json)
    out << format_report_json({name}, {report}) << '\n';
  else
    out << format_report_table({name}, {report});
  return 0;
}

std::vector<double> parse_grid(const std::string& csv, const char* flag) {
  std::vector<double> grid;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      grid.push_back(v);
    } catch (const std::exception&) {
      throw DataError(std::string(flag) + ": cannot parse '" + item + "'");
    }
  }
  if (grid.empty()) throw DataError(std::string(flag) + ": empty grid");
  return grid;
}

int cmd_tune(const CorpusOpts& c, DecodeOpts o, const std::string& alpha_grid,
             const std::string& beta_grid, const std::string& stop_path,
             bool as_json, int jobs, std::ostream& out, std::ostream& err) {
  std::vector<double> alphas = parse_grid(alpha_grid, "--alpha-grid");
  std::vector<double> betas = parse_grid(beta_grid, "--beta-grid");
  std::vector<DialoguePair> pairs = load_pairs(require_file(c.pairs), c.raw);
  LoadedModels m = load_models(o, o.mmi_lambda != 0.0);
  std::unordered_set<std::string> stop_set = stop_set_from(stop_path);

  std::vector<TokenSeq> sources;
  std::vector<TokenSeq> references;
  sources.reserve(pairs.size());
  references.reserve(pairs.size());
  for (DialoguePair& p : pairs) {
    sources.push_back(std::move(p.source));
    references.push_back(std::move(p.target));
  }

  std::vector<std::string> names;
  std::vector<MetricsReport> reports;
  for (double alpha : alphas) {
    for (double beta : betas) {
      o.alpha = alpha;
      o.beta = beta;
      DecoderConfig config = to_decoder_config(o);
      std::vector<TokenSeq> responses = top_responses(sources, m, config, jobs);
      std::ostringstream name;
      name << "alpha=" << alpha << " beta=" << beta;
      names.push_back(name.str());
      reports.push_back(compute_report(responses, references, stop_set));
      err << "tuned " << name.str() << '\n';
    }
  }
  if (as_json)
    out << format_report_json(names, reports) << '\n';
  else
    out << format_report_table(names, reports);
  return 0;
}

int cmd_diagnose(const DecodeOpts& o, const std::string& source_text,
                 const std::string& prefix_text, const std::string& stop_path,
                 int per_topic, int show, std::ostream& out) {
  LoadedModels m = load_models(o, false);
  fs::path dir(o.model_dir);
  HmmLdaState state =
      HmmLdaState::load(require_file(dir / "hmmlda.txt").string());
  std::unordered_set<std::string> stop_set = stop_set_from(stop_path);

  std::unordered_set<std::string> topic_set;
  for (int z = 0; z < state.topics(); ++z)
    for (std::string& w : top_topic_words(state, m.vocab, z, per_topic, stop_set))
      topic_set.insert(std::move(w));

  std::vector<int> source_ids = m.vocab.ids(tokenize(source_text));
  std::vector<int> prefix_ids = m.vocab.ids(tokenize(prefix_text));
  DiagnoseTables tables = diagnose_split(m.forward, m.vocab, source_ids,
                                         prefix_ids, stop_set, topic_set);

  auto print = [&](const char* title,
                   const std::vector<std::pair<std::string, double>>& rows) {
    out << title << '\n';
    std::size_t limit = show > 0 ? static_cast<std::size_t>(show) : rows.size();
    for (std::size_t i = 0; i < rows.size() && i < limit; ++i)
      out << "  " << rows[i].first << '\t' << rows[i].second << '\n';
  };
  print("stop words:", tables.stop_words);
  print("topic words:", tables.topic_words);
  return 0;
}

int cmd_repl(const DecodeOpts& o, std::istream& in, std::ostream& out,
             std::ostream& err) {
  DecoderConfig config = to_decoder_config(o);
  LoadedModels m = load_models(o, config.mmi_lambda != 0.0);
  std::string line;
  err << "> " << std::flush;
  while (std::getline(in, line)) {
    TokenSeq source = tokenize(line);
    if (source.empty()) {
      err << "> " << std::flush;
      continue;
    }
    std::vector<Candidate> cands = decode_one(source, m, config);
    if (cands.empty()) {
      out << "(no response)\n";
    } else {
      const Candidate& top = cands.front();
      out << join_tokens(m.vocab.surface(top.tokens)) << '\n';
      out << "  loglik=" << top.loglik << " topic=" << top.topic_score
          << " semantic=" << top.semantic_score;
      if (top.reranked) out << " reverse=" << top.reverse_score;
      out << " total=" << top.total << '\n';
    }
    err << "> " << std::flush;
  }
  return 0;
}

}  // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Constrained beam-search response generation toolkit"};
  app.name("dcgen");
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "INI config file (key = value, [subcommand] sections); "
                 "flags override file values");

  // train-hmmlda
  CorpusOpts hmm_corpus;
  HmmLdaConfig hmm_cfg;
  std::optional<double> hmm_alpha_t;
  CLI::App* hmm = app.add_subcommand(
      "train-hmmlda", "Train the syntax-topic model and export word statistics");
  add_corpus_options(hmm, hmm_corpus, true);
  hmm->add_option("--topics", hmm_cfg.topics, "Topic count K")
      ->check(CLI::Range(2, 1 << 20));
  hmm->add_option("--classes", hmm_cfg.classes, "Syntax class count")
      ->check(CLI::Range(2, 1 << 20));
  hmm->add_option("--alpha-t", hmm_alpha_t,
                  "Document-topic prior (default 50/K)");
  hmm->add_option("--beta-t", hmm_cfg.beta_t, "Topic-word prior");
  hmm->add_option("--delta-c", hmm_cfg.delta_c, "Class-word prior");
  hmm->add_option("--gamma-c", hmm_cfg.gamma_c, "Class-transition prior");
  hmm->add_option("--burn-in", hmm_cfg.burn_in, "Gibbs sweeps before reading");
  hmm->add_option("--samples", hmm_cfg.sample_count,
                  "Average word statistics over this many final sweeps");
  hmm->add_option("--seed", hmm_cfg.seed, "Sampler seed");

  // build-sif
  CorpusOpts sif_corpus;
  std::string sif_vectors;
  int sif_dim = 50;
  double sif_a = 1e-3;
  std::uint64_t sif_seed = 1;
  int sif_threads = 0;
  CLI::App* sif = app.add_subcommand(
      "build-sif", "Fit the sentence-embedding model on the pair corpus");
  add_corpus_options(sif, sif_corpus, true);
  sif->add_option("--vectors", sif_vectors,
                  "Word vector file (default: deterministic random vectors)");
  sif->add_option("--dim", sif_dim, "Dimension of generated random vectors")
      ->check(CLI::PositiveNumber);
  sif->add_option("--a", sif_a, "Inverse-frequency weighting constant");
  sif->add_option("--seed", sif_seed, "Random vector seed");
  sif->add_option("--threads", sif_threads, "Worker threads (0 = all cores)");

  // train-lm
  CorpusOpts lm_corpus;
  int lm_order = 3;
  double lm_discount = 0.75;
  int lm_em_iters = 10;
  int lm_threads = 0;
  CLI::App* lm = app.add_subcommand(
      "train-lm", "Train forward and reverse n-gram models and lexical tables");
  add_corpus_options(lm, lm_corpus, true);
  lm->add_option("--order", lm_order, "N-gram order")->check(CLI::PositiveNumber);
  lm->add_option("--discount", lm_discount, "Absolute discount");
  lm->add_option("--em-iterations", lm_em_iters, "Lexical EM iterations")
      ->check(CLI::PositiveNumber);
  lm->add_option("--threads", lm_threads, "Worker threads (0 = all cores)");

  // decode
  CorpusOpts dec_corpus;
  DecodeOpts dec_opts;
  int dec_nbest = 0;
  int dec_jobs = 1;
  std::string dec_out;
  CLI::App* dec = app.add_subcommand(
      "decode", "Decode every source in a pair file to a candidate list");
  dec->add_option("--pairs", dec_corpus.pairs,
                  "TSV file, one `source<TAB>target` per line")
      ->required();
  dec->add_flag("--raw", dec_corpus.raw,
                "Run the pair file through the tokenizer instead of splitting on spaces");
  add_decode_options(dec, dec_opts);
  dec->add_option("--nbest", dec_nbest,
                  "Keep at most this many candidates per input (0 = all)");
  dec->add_option("--jobs", dec_jobs, "Decode this many inputs concurrently");
  dec->add_option("--out", dec_out, "Output file (default: standard output)");

  // rerank
  std::string rr_in;
  DecodeOpts rr_opts;
  std::string rr_out;
  CLI::App* rr = app.add_subcommand(
      "rerank", "Rerank a decode output file with the reverse model");
  rr->add_option("--in", rr_in, "Decode output to rerank")->required();
  add_decode_options(rr, rr_opts);
  rr->add_option("--out", rr_out, "Output file (default: standard output)");

  // eval
  std::string ev_in;
  std::string ev_refs;
  bool ev_raw = false;
  std::string ev_stop;
  bool ev_json = false;
  std::string ev_name = "system";
  CLI::App* ev = app.add_subcommand(
      "eval", "Compute diversity and overlap metrics for a decode output");
  ev->add_option("--in", ev_in, "Decode output to evaluate")->required();
  ev->add_option("--refs", ev_refs,
                 "Pair file whose targets serve as references (enables BLEU-1)");
  ev->add_flag("--raw", ev_raw, "Tokenize the reference file");
  ev->add_option("--stopwords", ev_stop,
                 "Stop-word list, one per line (default: built-in)");
  ev->add_flag("--json", ev_json, "Emit JSON instead of a table");
  ev->add_option("--name", ev_name, "Row label for the report");

  // tune
  CorpusOpts tune_corpus;
  DecodeOpts tune_opts;
  std::string tune_alpha_grid = "0,2,5";
  std::string tune_beta_grid = "0,2";
  std::string tune_stop;
  bool tune_json = false;
  int tune_jobs = 1;
  CLI::App* tn = app.add_subcommand(
      "tune", "Decode under a constraint-weight grid and report metrics per point");
  tn->add_option("--pairs", tune_corpus.pairs,
                 "TSV file, one `source<TAB>target` per line")
      ->required();
  tn->add_flag("--raw", tune_corpus.raw,
               "Run the pair file through the tokenizer instead of splitting on spaces");
  add_decode_options(tn, tune_opts);
  tn->add_option("--alpha-grid", tune_alpha_grid, "Comma-separated alpha values");
  tn->add_option("--beta-grid", tune_beta_grid, "Comma-separated beta values");
  tn->add_option("--stopwords", tune_stop, "Stop-word list (default: built-in)");
  tn->add_flag("--json", tune_json, "Emit JSON instead of a table");
  tn->add_option("--jobs", tune_jobs, "Decode this many inputs concurrently");

  // diagnose
  DecodeOpts diag_opts;
  std::string diag_source;
  std::string diag_prefix;
  std::string diag_stop;
  int diag_per_topic = 10;
  int diag_show = 20;
  CLI::App* dg = app.add_subcommand(
      "diagnose", "Split next-token log-probabilities into stop and topic tables");
  add_decode_options(dg, diag_opts);
  dg->add_option("--source", diag_source, "Source utterance")->required();
  dg->add_option("--prefix", diag_prefix, "Partial response so far");
  dg->add_option("--stopwords", diag_stop, "Stop-word list (default: built-in)");
  dg->add_option("--per-topic", diag_per_topic,
                 "Topic words taken from each topic")
      ->check(CLI::PositiveNumber);
  dg->add_option("--show", diag_show, "Rows printed per table (0 = all)");

  // repl
  DecodeOpts repl_opts;
  CLI::App* rp = app.add_subcommand(
      "repl", "Read sources line by line and print the top response");
  add_decode_options(rp, repl_opts);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (hmm->parsed()) return cmd_train_hmmlda(hmm_corpus, hmm_cfg, hmm_alpha_t, err);
    if (sif->parsed())
      return cmd_build_sif(sif_corpus, sif_vectors, sif_dim, sif_a, sif_seed,
                           sif_threads, err);
    if (lm->parsed())
      return cmd_train_lm(lm_corpus, lm_order, lm_discount, lm_em_iters,
                          lm_threads, err);
    if (dec->parsed())
      return cmd_decode(dec_corpus, dec_opts, dec_nbest, dec_jobs, dec_out, out,
                        err);
    if (rr->parsed()) return cmd_rerank(rr_in, rr_opts, rr_out, out, err);
    if (ev->parsed())
      return cmd_eval(ev_in, ev_refs, ev_raw, ev_stop, ev_json, ev_name, out);
    if (tn->parsed())
      return cmd_tune(tune_corpus, tune_opts, tune_alpha_grid, tune_beta_grid,
                      tune_stop, tune_json, tune_jobs, out, err);
    if (dg->parsed())
      return cmd_diagnose(diag_opts, diag_source, diag_prefix, diag_stop,
                          diag_per_topic, diag_show, out);
    if (rp->parsed()) return cmd_repl(repl_opts, std::cin, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace dcgen::cli
