// Copyright 2026 The topicret Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "topicret/cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "topicret/binary_io.hpp"
#include "topicret/config.hpp"
#include "topicret/index.hpp"
#include "topicret/pipeline.hpp"
#include "topicret/retrieval.hpp"
#include "topicret/synth.hpp"
#include "topicret/trainer.hpp"

namespace topicret {

namespace {

namespace fs = std::filesystem;

constexpr double kGradientTolerance = 1e-4;

bool is_validation(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParseError:
    case ErrorCode::kDuplicateId:
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kInvalidK:
    case ErrorCode::kInvalidSpace:
    case ErrorCode::kEmptyText:
    case ErrorCode::kEmptyCorpus:
      return true;
    default:
      return false;
  }
}

void require_file(const std::string& path, std::string_view what) {
  if (path.empty()) {
    throw Error(ErrorCode::kInvalidConfig, std::string(what) + " path is not set");
  }
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorCode::kInvalidConfig,
                std::string(what) + " not found: " + path);
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string());
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// Config flags shared by every subcommand, applied over the config file.
struct Overrides {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::vector<std::string> assignments;
};

void add_config_flags(CLI::App& app, Overrides& o) {
  app.add_option("--config", o.config_path, "key=value config file");
  const std::pair<const char*, const char*> flags[] = {
      {"seed", "random seed"},
      {"threads", "worker threads"},
      {"dim", "output embedding dimension"},
      {"scheme", "index quantization {f32,f16,u8}"},
      {"granularity", "pooling mode {topic,word,global}"},
      {"k", "results per query"},
      {"theta-t", "representative topic threshold"},
      {"theta-wf", "fixed word probability threshold"},
      {"theta-wr", "word rank ratio threshold"},
      {"topics", "number of topics K"},
      {"normalize", "L2-normalize embeddings {on,off}"},
      {"epochs", "training epochs"},
      {"collection", "document collection TSV"},
      {"queries", "query TSV"},
      {"qrels", "TREC qrels"},
      {"triples", "training triples TSV"},
      {"train-queries", "training query TSV"},
      {"artifacts", "artifact directory"},
  };
  for (const auto& [key, help] : flags) {
    app.add_option_function<std::string>(
        std::string("--") + key,
        [&o, k = std::string(key)](const std::string& v) { o.values[k] = v; }, help);
  }
  app.add_option("--set", o.assignments, "extra key=value overrides");
}

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : RunConfig::load(o.config_path);
  for (const auto& [k, v] : o.values) c.set(k, v);
  for (const auto& a : o.assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParseError, "--set expects key=value, got '" + a + "'");
    }
    c.set(a.substr(0, eq), a.substr(eq + 1));
  }
  c.validate();
  omp_set_num_threads(static_cast<int>(c.threads));
  return c;
}

const TextCollection& training_queries(const RunConfig& c, TextCollection& storage) {
  const std::string& path = c.train_queries.empty() ? c.queries : c.train_queries;
  require_file(path, "training queries");
  storage = read_collection(path);
  return storage;
}

int cmd_synth(const RunConfig& c, const SynthConfig& base, const std::string& out_dir,
              std::ostream& out) {
  SynthConfig s = base;
  s.topics = c.topics;
  s.seed = c.seed;
  s.negatives = c.negatives;
  const fs::path dir = out_dir.empty() ? fs::path(c.artifacts) : fs::path(out_dir);
  const auto corpus = generate_synth(s);
  write_synth(dir, corpus);
  RunConfig written = c;
  written.collection = (dir / synth_files::kCollection).string();
  written.queries = (dir / synth_files::kQueries).string();
  written.train_queries = (dir / synth_files::kTrainQueries).string();
  written.qrels = (dir / synth_files::kQrels).string();
  written.triples = (dir / synth_files::kTriples).string();
  io::write_text_file(dir / "run.conf", written.render());
  out << "docs\t" << corpus.docs.size() << "\nqueries\t" << corpus.queries.size()
      << "\ntrain_queries\t" << corpus.train_queries.size() << "\ntriples\t"
      << corpus.triples.triples.size() << "\nconfig\t" << (dir / "run.conf").string()
      << '\n';
  return kExitOk;
}

int cmd_lda_train(const RunConfig& c, std::ostream& out) {
  require_file(c.collection, "collection");
  const auto docs = read_collection(c.collection);
  const auto stage = fit_topic_stage(c, docs);
  ensure_dir(c.artifacts);
  io::write_text_file(c.artifact(artifact_files::kVocab), stage.vocab.serialize());
  stage.lda.save(c.artifact(artifact_files::kLda));
  out << "vocab\t" << stage.vocab.size() << "\ntopics\t" << stage.lda.topics()
      << "\ndocs\t" << stage.lda.documents() << "\nfingerprint\t"
      << to_hex(c.fingerprint(stage.vocab)) << '\n';
  return kExitOk;
}

int cmd_train(const RunConfig& c, std::ostream& out, std::ostream& err) {
  require_file(c.collection, "collection");
  require_file(c.triples, "triples");
  const auto docs = read_collection(c.collection);
  TextCollection query_storage;
  const auto& queries = training_queries(c, query_storage);
  const auto triples = read_triples(c.triples);
  if (triples.negatives != c.negatives) {
    throw Error(ErrorCode::kInvalidConfig,
                "triples carry " + std::to_string(triples.negatives) +
                    " negatives but negatives=" + std::to_string(c.negatives));
  }

  Workspace w;
  w.config = c;
  w.vocab = Vocab::parse(io::read_text_file(c.artifact(artifact_files::kVocab)));
  w.lda = LdaModel::load(c.artifact(artifact_files::kLda), c.lda_infer_iters);
  w.fingerprint = c.fingerprint(w.vocab);
  const auto ctx = w.context();
  const auto data = prepare_training(ctx, docs, queries, triples);

  const auto initial = EncoderParams::initialize(c.encoder_shape(w.vocab.size()),
                                                 c.init_seed());
  const auto result =
      train(c.train(), data.texts, data.examples, initial, w.fingerprint,
            [&](std::size_t epoch, double loss) {
              out << "epoch\t" << epoch << '\t' << fixed(loss, 6) << '\n';
            });
  result.checkpoint.save(c.artifact(artifact_files::kCheckpoint));
  io::write_text_file(c.artifact(artifact_files::kTrainLog),
                      render_training_log(result.epoch_losses));
  if (result.diverged) {
    err << "training diverged; kept parameters from the last finite step\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_encode(const RunConfig& c, const std::string& input, const std::string& kind_name,
               const std::string& output, std::ostream& out) {
  TextKind kind;
  if (kind_name == "query") {
    kind = TextKind::kQuery;
  } else if (kind_name == "document") {
    kind = TextKind::kDocument;
  } else {
    throw Error(ErrorCode::kInvalidConfig, "--kind must be query or document");
  }
  const std::string path = input.empty() ? c.queries : input;
  require_file(path, "input");
  const auto texts = read_collection(path);
  const auto w = Workspace::load(c);
  const auto reps = encode_collection(w.context(), texts, kind, c.granularity);
  const auto index = RepresentationIndex::build(reps, c.dim, c.scheme, c.granularity,
                                                w.fingerprint);
  const fs::path dest = output.empty() ? c.artifact("encoded.tgix") : fs::path(output);
  index.save(dest);
  out << "texts\t" << index.size() << "\nembeddings\t" << index.space().embeddings_stored
      << "\noutput\t" << dest.string() << '\n';
  return kExitOk;
}

int cmd_index(const RunConfig& c, std::ostream& out) {
  require_file(c.collection, "collection");
  const auto docs = read_collection(c.collection);
  const auto w = Workspace::load(c);
  const auto index = build_index(w.context(), docs, w.checkpoint, w.fingerprint, c.scheme,
                                 c.granularity, c.artifact(artifact_files::kIndex));
  out << render_space_stats(index.space());
  return kExitOk;
}

RepresentationIndex load_matching_index(const Workspace& w, const std::string& path) {
  const fs::path p = path.empty() ? w.config.artifact(artifact_files::kIndex) : fs::path(path);
  auto index = RepresentationIndex::load(p);
  if (index.fingerprint() != w.fingerprint ||
      index.granularity() != w.config.granularity || index.dim() != w.config.dim) {
    throw Error(ErrorCode::kIncompatibleArtifacts,
                "index " + p.string() + " was built under a different configuration");
  }
  return index;
}

int cmd_search(const RunConfig& c, const std::string& index_path, const std::string& output,
               std::ostream& out) {
  require_file(c.queries, "queries");
  const auto queries = read_collection(c.queries);
  const auto w = Workspace::load(c);
  const auto index = load_matching_index(w, index_path);
  const auto reps = encode_collection(w.context(), queries, TextKind::kQuery, c.granularity);
  const auto docs = DocumentMatrix::from_index(index);
  const auto run = search_all(docs, reps, c.k);
  const fs::path dest = output.empty() ? c.artifact(artifact_files::kRun) : fs::path(output);
  write_run(dest, run, "topicret");
  out << "queries\t" << run.size() << "\nrun\t" << dest.string() << '\n';
  return kExitOk;
}

int cmd_eval(const RunConfig& c, const std::string& run_path, bool with_space,
             const std::string& index_path, std::size_t mrr_k, std::size_t recall_k,
             std::ostream& out, std::ostream& err) {
  const std::string rp =
      run_path.empty() ? c.artifact(artifact_files::kRun).string() : run_path;
  require_file(rp, "run");
  require_file(c.qrels, "qrels");
  const auto run = read_run(rp);
  const auto qrels = read_qrels(c.qrels);
  const auto m = evaluate(run, qrels, mrr_k, recall_k);
  for (const auto& q : m.skipped) err << "warning: no judgments for query " << q << '\n';
  std::string report = render_metrics(m);
  if (with_space) {
    const std::string ip =
        index_path.empty() ? c.artifact(artifact_files::kIndex).string() : index_path;
    require_file(ip, "index");
    const auto stats = scan_space(io::read_file(ip));
    report += render_space_stats(stats);
    report += "tradeoff_e3\t" + fixed(tradeoff(m.mrr_at_k, stats.total_gib()) * 1e3, 3) +
              '\n';
  }
  out << report;
  if (fs::is_directory(c.artifacts)) {
    io::write_text_file(c.artifact(artifact_files::kMetrics), report);
  }
  return kExitOk;
}

int cmd_space_report(const RunConfig& c, const std::string& index_path, std::ostream& out) {
  const std::string ip =
      index_path.empty() ? c.artifact(artifact_files::kIndex).string() : index_path;
  require_file(ip, "index");
  const auto bytes = io::read_file(ip);
  const auto scanned = scan_space(bytes);
  const auto derived = RepresentationIndex::deserialize(bytes).space();
  if (!(scanned == derived)) {
    throw Error(ErrorCode::kFormatError, "record scan disagrees with header accounting");
  }
  out << render_space_stats(derived);
  return kExitOk;
}

int cmd_grad_check(const RunConfig& c, std::ostream& out) {
  const auto r = check_gradients(c.seed, c.granularity);
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "max_relative_error\t%.3e\nworst\t%s[%zu]\nanalytic\t%.9g\nnumeric\t%.9g\n"
                "coordinates\t%zu\n",
                r.max_relative_error, r.worst_tensor.c_str(), r.worst_index,
                r.worst_analytic, r.worst_numeric, r.coordinates);
  out << buf;
  const bool ok = r.max_relative_error <= kGradientTolerance;
  out << (ok ? "PASS\n" : "FAIL\n");
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Topic-grained text representation retrieval"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides overrides;
  add_config_flags(app, overrides);

  auto* synth = app.add_subcommand("synth", "generate the planted retrieval task");
  SynthConfig synth_cfg;
  std::string synth_out;
  synth->add_option("--docs", synth_cfg.docs, "documents");
  synth->add_option("--queries", synth_cfg.queries, "evaluation queries");
  synth->add_option("--train-queries", synth_cfg.train_queries, "training queries");
  synth->add_option("--out", synth_out, "output directory (default: artifacts)");

  auto* lda = app.add_subcommand("lda-train", "build the vocabulary and fit topics");
  auto* trn = app.add_subcommand("train", "train the encoder on triples");

  auto* enc = app.add_subcommand("encode", "encode a TSV collection into a TGIX file");
  std::string enc_input, enc_kind = "query", enc_output;
  enc->add_option("--input", enc_input, "TSV to encode (default: queries)");
  enc->add_option("--kind", enc_kind, "query or document");
  enc->add_option("--output", enc_output, "output path");

  auto* idx = app.add_subcommand("index", "encode the collection into index.tgix");

  auto* srch = app.add_subcommand("search", "rank the collection for every query");
  std::string search_index, search_output;
  srch->add_option("--index", search_index, "index path");
  srch->add_option("--output", search_output, "run path");

  auto* ev = app.add_subcommand("eval", "score a run against qrels");
  std::string eval_run, eval_index;
  bool with_space = false;
  std::size_t mrr_k = 10, recall_k = 1000;
  ev->add_option("--run", eval_run, "TREC run file");
  ev->add_flag("--with-space", with_space, "report index space and trade-off");
  ev->add_option("--index", eval_index, "index path for --with-space");
  ev->add_option("--mrr-k", mrr_k, "MRR cutoff");
  ev->add_option("--recall-k", recall_k, "Recall cutoff");

  auto* space = app.add_subcommand("space-report", "byte accounting of an index");
  std::string space_index;
  space->add_option("--index", space_index, "index path");

  auto* grad = app.add_subcommand("grad-check", "finite-difference gradient audit");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    if (!argv_rev.empty()) argv_rev.pop_back();  // program name
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    const RunConfig c = resolve(overrides);
    if (*synth) return cmd_synth(c, synth_cfg, synth_out, out);
    if (*lda) return cmd_lda_train(c, out);
    if (*trn) return cmd_train(c, out, err);
    if (*enc) return cmd_encode(c, enc_input, enc_kind, enc_output, out);
    if (*idx) return cmd_index(c, out);
    if (*srch) return cmd_search(c, search_index, search_output, out);
    if (*ev) {
      return cmd_eval(c, eval_run, with_space, eval_index, mrr_k, recall_k, out, err);
    }
    if (*space) return cmd_space_report(c, space_index, out);
    if (*grad) return cmd_grad_check(c, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_validation(e.code()) ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitValidation;
}

int dispatch(int argc, char** argv) {
  return dispatch(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace topicret
