#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "serc/config.hpp"
#include "serc/experiment.hpp"
#include "serc/metrics.hpp"
#include "serc/oracle_backend.hpp"
#include "serc/pipeline.hpp"
#include "serc/remote_backend.hpp"

namespace serc::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string config;
  std::string out_dir = "out";
  std::string kb;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::string density;
  CLI::Option* density_opt = nullptr;
  int parallel_checks = 1;
  CLI::Option* parallel_opt = nullptr;
  int max_group_size = 0;
  CLI::Option* group_opt = nullptr;
  bool no_rag = false;
  bool no_firewall = false;
};

void add_common(CLI::App* cmd, Flags& f, bool with_density = true) {
  cmd->add_option("--config", f.config, "Settings file (TOML)")->check(CLI::ExistingFile);
  cmd->add_option("--out-dir", f.out_dir, "Directory for traces and CSV files");
  f.seed_opt = cmd->add_option("--seed", f.seed, "Base seed");
  if (with_density) {
    f.density_opt = cmd->add_option("--density", f.density, "Check-node density: low or high")
                        ->check(CLI::IsMember({"low", "high"}));
    f.group_opt = cmd->add_option("--max-group-size", f.max_group_size, "Chunk check groups to at most N facts");
  }
  f.parallel_opt = cmd->add_option("--parallel-checks", f.parallel_checks, "Concurrent check-node evaluations")
                       ->check(CLI::PositiveNumber);
}

Settings settings_for(const Flags& f) {
  Settings s = f.config.empty() ? Settings{} : load_settings(f.config);
  if (f.seed_opt && f.seed_opt->count()) s.seed = f.seed;
  if (f.density_opt && f.density_opt->count()) s.pipeline.density = parse_density(f.density);
  if (f.group_opt && f.group_opt->count()) s.pipeline.max_group_size = f.max_group_size;
  if (f.parallel_opt && f.parallel_opt->count()) s.pipeline.parallel_checks = f.parallel_checks;
  if (f.no_rag) s.pipeline.rag_enabled = false;
  if (f.no_firewall) s.pipeline.firewall_enabled = false;
  s.pipeline.top_k = s.remote.retriever_top_k;
  s.pipeline.context_char_cap = s.remote.context_char_cap;
  s.pipeline.validate();
  s.episode.pipeline = s.pipeline;
  return s;
}

std::string method_name(const PipelineConfig& p) {
  std::string m = "serc";
  if (!p.rag_enabled) m += "-no-rag";
  if (!p.firewall_enabled) m += "-no-firewall";
  return m;
}

fs::path ensure_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
  return p;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string require_env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (!v || !*v)
    throw std::runtime_error("the remote backend needs an API key: set the " + name +
                             " environment variable (or rename it in the [backend]/[retriever] config)");
  return v;
}

std::vector<AtomicFact> facts_of(const std::vector<SentenceUnit>& sentences) {
  std::vector<AtomicFact> out;
  for (const auto& s : sentences) out.insert(out.end(), s.facts.begin(), s.facts.end());
  return out;
}

std::string runs_csv(const std::vector<RunRow>& rows) {
  std::string out = std::string(kRunCsvHeader) + "\n";
  for (const auto& r : rows) out += csv_row(r) + "\n";
  return out;
}

// ---------------------------------------------------------------- correct

struct CorrectArgs {
  Flags flags;
  std::string backend;
  CLI::Option* backend_opt = nullptr;
  std::string noisy;
  std::string query;
  std::string input_file;
};

int cmd_correct(const CorrectArgs& a, std::ostream& out, std::ostream& err) {
  auto s = settings_for(a.flags);
  if (a.backend_opt && a.backend_opt->count()) s.backend = a.backend;

  std::optional<KnowledgeBase> kb;
  if (!a.flags.kb.empty()) kb = KnowledgeBase::load(a.flags.kb);
  std::optional<NoisyObservation> script;
  if (!a.noisy.empty()) script = load_observation(a.noisy);

  std::string query = a.query;
  if (query.empty() && !a.input_file.empty()) {
    auto text = read_file(a.input_file);
    auto b = text.find_first_not_of(" \t\r\n");
    auto e = text.find_last_not_of(" \t\r\n");
    if (b != std::string::npos) query = text.substr(b, e - b + 1);
  }
  if (query.empty() && script) query = bio_query(script->entity);
  if (query.empty()) throw UsageError("correct needs --query, --input-file or --noisy");

  std::unique_ptr<SemanticOps> ops;
  std::unique_ptr<Retriever> retriever;
  if (s.backend == "oracle") {
    if (!kb) throw UsageError("the oracle backend needs --kb");
    ops = std::make_unique<OracleOps>(*kb, script, s.remote.summary_char_cap);
    retriever = std::make_unique<KbRetriever>(*kb, s.remote.context_char_cap);
  } else {
    ops = std::make_unique<RemoteOps>(s.remote, require_env(s.remote.chat_api_key_env));
    if (s.pipeline.rag_enabled)
      retriever = std::make_unique<HttpRetriever>(s.remote, require_env(s.remote.search_api_key_env));
    else
      retriever = std::make_unique<EmptyRetriever>();
  }

  TraceLog trace;
  std::vector<Dependency> deps = kb ? kb->dependencies() : std::vector<Dependency>{};
  Decoder decoder(*ops, *retriever, s.pipeline, deps, &trace);
  auto response = decoder.run(query, {"run1", method_name(s.pipeline)});
  for (const auto& w : decoder.warnings()) err << "warning: " << w << "\n";

  auto dir = ensure_dir(a.flags.out_dir);
  write_file(dir / "trace.jsonl", trace.jsonl());
  if (kb) write_file(dir / "metrics.csv", runs_csv({report_from_trace(trace.events(), *kb)}));
  out << response.final_text << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  Flags flags;
  std::string entity;
  int sentences = 0;
  CLI::Option* sentences_opt = nullptr;
  int facts = 0;
  CLI::Option* facts_opt = nullptr;
  double p_swap = 0, p_corrupt = 0, p_fabricate = 0;
  CLI::Option *swap_opt = nullptr, *corrupt_opt = nullptr, *fabricate_opt = nullptr;
  std::string out_path;
};

void apply_noise_flags(const GenerateArgs& a, Settings& s) {
  if (a.sentences_opt->count()) s.episode.n_sentences = a.sentences;
  if (a.facts_opt->count()) s.episode.facts_per_sentence = a.facts;
  if (a.swap_opt->count()) s.episode.noise.p_entity_swap = a.p_swap;
  if (a.corrupt_opt->count()) s.episode.noise.p_corrupt = a.p_corrupt;
  if (a.fabricate_opt->count()) s.episode.noise.p_fabricate = a.p_fabricate;
  s.episode.noise.validate();
}

int cmd_generate(const GenerateArgs& a, std::ostream& out, std::ostream&) {
  auto s = settings_for(a.flags);
  apply_noise_flags(a, s);
  auto kb = KnowledgeBase::load(a.flags.kb);
  std::string entity = a.entity.empty() ? (kb.entities().empty() ? "" : kb.entities().front()) : a.entity;
  if (entity.empty()) throw std::runtime_error("knowledge base has no entities");
  auto ideal = generate_codeword(kb, entity, s.episode.n_sentences, s.episode.facts_per_sentence, s.seed);
  auto noise = s.episode.noise;
  noise.seed = s.seed;
  auto obs = inject_noise(ideal, noise, kb);
  save_observation(a.out_path, obs);

  int clean = 0, corrupted = 0, fabricated = 0;
  for (const auto& [ref, label] : obs.error_labels) {
    if (label.kind == ErrorKind::Clean) ++clean;
    if (label.kind == ErrorKind::Corrupted) ++corrupted;
    if (label.kind == ErrorKind::Fabricated) ++fabricated;
  }
  out << "wrote " << a.out_path << ": " << obs.response.size() << " sentences, " << obs.error_labels.size()
      << " facts (clean " << clean << ", corrupted " << corrupted << ", fabricated " << fabricated << ")";
  if (obs.entity_swapped) out << ", subject drifted to " << *obs.entity_swapped;
  out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  GenerateArgs noise;  // reuses the noise and shape flags
  std::string density = "low";
  int episodes = 100;
  CLI::Option* episodes_opt = nullptr;
  bool mixed = false;
  int threads = 1;
};

int cmd_simulate(SimulateArgs& a, std::ostream& out, std::ostream&) {
  auto& f = a.noise.flags;
  auto s = settings_for(f);
  apply_noise_flags(a.noise, s);
  if (a.mixed) s.episode.mixed_noise = true;
  auto kb = KnowledgeBase::load(f.kb);
  auto dir = ensure_dir(f.out_dir);

  std::vector<Density> modes;
  if (a.density == "both") modes = {Density::Low, Density::High};
  else modes = {parse_density(a.density)};

  std::map<Density, std::vector<Episode>> runs;
  for (auto d : modes) {
    auto cfg = s.episode;
    cfg.pipeline.density = d;
    cfg.method = method_name(cfg.pipeline);
    auto episodes = a.threads > 1 ? simulate_parallel(kb, cfg, s.seed, a.episodes, a.threads)
                                  : simulate_serial(kb, cfg, s.seed, a.episodes);
    std::vector<RunRow> rows;
    std::string traces;
    for (const auto& ep : episodes) {
      rows.push_back(ep.row);
      traces += ep.trace;
    }
    auto name = "simulate_" + std::string(to_string(d));
    auto table_rows = rows;
    if (!rows.empty()) {
      auto mean = summary_row(rows, "mean");
      rows.push_back(mean);
      table_rows = {mean};
    }
    write_file(dir / (name + ".csv"), runs_csv(rows));
    write_file(dir / (name + ".trace.jsonl"), traces);
    out << "density " << to_string(d) << ": " << episodes.size() << " episode(s), seed " << s.seed << "\n";
    if (!table_rows.empty()) out << format_table(table_rows);
    runs[d] = std::move(episodes);
  }

  if (modes.size() == 2) {
    std::string csv = std::string(kReductionCsvHeader) + "\n";
    double low_sum = 0, high_sum = 0;
    const auto& low = runs[Density::Low];
    const auto& high = runs[Density::High];
    for (std::size_t i = 0; i < low.size(); ++i) {
      csv += csv_row(reduction_row("ep" + std::to_string(i), low[i].row.total_tokens, high[i].row.total_tokens)) + "\n";
      low_sum += low[i].row.total_tokens;
      high_sum += high[i].row.total_tokens;
    }
    if (!low.empty()) {
      auto total = reduction_row("total", low_sum, high_sum);
      csv += csv_row(total) + "\n";
      out << "token reduction low vs high: " << (total.reduction_pct ? std::to_string(*total.reduction_pct) : "N/A")
          << "%\n";
    }
    write_file(dir / "reduction.csv", csv);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- ablate

struct AblateArgs {
  Flags flags;
  std::string which;
  std::string noisy;
  std::string query;
};

int cmd_ablate(const AblateArgs& a, std::ostream& out, std::ostream&) {
  auto s = settings_for(a.flags);
  auto kb = KnowledgeBase::load(a.flags.kb);

  NoisyObservation obs;
  std::string query = a.query;
  if (!a.noisy.empty()) {
    obs = load_observation(a.noisy);
  } else {
    auto cfg = s.episode;
    auto ep = run_episode(kb, cfg, s.seed, 0);
    obs = ep.observation;
  }
  if (query.empty()) query = bio_query(obs.entity);

  PipelineConfig full = s.pipeline, variant = s.pipeline;
  full.rag_enabled = true;
  full.firewall_enabled = true;
  variant.rag_enabled = true;
  variant.firewall_enabled = true;
  if (a.which == "no-rag") variant.rag_enabled = false;
  if (a.which == "no-firewall") variant.firewall_enabled = false;
  if (a.which == "high-density") {
    full.density = Density::Low;
    full.max_group_size = 0;
    variant.density = Density::High;
    variant.max_group_size = 0;
  }

  struct Result {
    PipelineResponse response;
    RunRow row;
    Precision initial;
  };
  auto decode = [&](const PipelineConfig& cfg, const std::string& tag) {
    OracleOps ops(kb, obs, s.remote.summary_char_cap);
    KbRetriever retriever(kb, s.remote.context_char_cap);
    TraceLog trace;
    Decoder decoder(ops, retriever, cfg, kb.dependencies(), &trace);
    Result r;
    r.response = decoder.run(query, {tag, method_name(cfg)});
    r.row = report_from_trace(trace.events(), kb);
    r.initial = oracle_precision(facts_of(r.response.sentences), kb);
    write_file(ensure_dir(a.flags.out_dir) / ("ablate_" + a.which + "_" + tag + ".trace.jsonl"), trace.jsonl());
    return r;
  };
  auto f = decode(full, "full");
  auto v = decode(variant, "variant");

  write_file(ensure_dir(a.flags.out_dir) / ("ablate_" + a.which + ".csv"), runs_csv({f.row, v.row}));
  out << "ablation " << a.which << " on " << obs.entity << "\n" << format_table({f.row, v.row});

  auto yes = [](bool b) { return b ? "yes" : "no"; };
  auto improved = [](const Result& r) {
    return !r.row.precision_vacuous && r.row.precision > r.initial.value;
  };
  if (a.which == "no-firewall") {
    auto subjects = [&](const Result& r) {
      std::string list;
      for (const auto& e : kb_subjects(r.response.final_facts, kb)) list += (list.empty() ? "" : "; ") + e;
      return list;
    };
    out << "chimera full=" << yes(is_chimera(f.response.final_facts, kb)) << " (" << subjects(f) << ")"
        << " variant=" << yes(is_chimera(v.response.final_facts, kb)) << " (" << subjects(v) << ")\n";
    out << "hard reset full=" << yes(f.response.hard_reset_applied) << " variant=" << yes(v.response.hard_reset_applied)
        << "\n";
  } else if (a.which == "no-rag") {
    char buf[160];
    std::snprintf(buf, sizeof buf, "precision initial=%.4f full=%.4f%s variant=%.4f%s\n", f.initial.value,
                  f.row.precision, f.row.precision_vacuous ? "*" : "", v.row.precision,
                  v.row.precision_vacuous ? "*" : "");
    out << buf << "improved over initial full=" << yes(improved(f)) << " variant=" << yes(improved(v)) << "\n";
  } else {
    auto c = cost_report(static_cast<std::int64_t>(f.row.total_tokens), static_cast<std::int64_t>(v.row.total_tokens));
    char buf[160];
    std::snprintf(buf, sizeof buf, "precision low=%.4f high=%.4f; reduction_pct=%s\n", f.row.precision,
                  v.row.precision, c.reduction ? std::to_string(100.0 * *c.reduction).c_str() : "N/A");
    out << buf;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::string trace;
  std::string kb;
};

int cmd_report(const ReportArgs& a, std::ostream& out, std::ostream&) {
  auto kb = KnowledgeBase::load(a.kb);
  std::ifstream in(a.trace);
  if (!in) throw std::runtime_error("cannot read trace '" + a.trace + "'");
  auto events = TraceLog::read(in);
  out << runs_csv({report_from_trace(events, kb)});
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semantic error correction for retrieval-augmented answers", "serc"};
  app.require_subcommand(1);

  CorrectArgs correct;
  auto* c = app.add_subcommand("correct", "Decode one answer and print the corrected text");
  add_common(c, correct.flags);
  c->add_option("--backend", correct.backend, "oracle or remote")->check(CLI::IsMember({"oracle", "remote"}));
  correct.backend_opt = c->get_option("--backend");
  c->add_option("--kb", correct.flags.kb, "Knowledge base file")->check(CLI::ExistingFile);
  c->add_option("--noisy", correct.noisy, "Noisy observation fixture (oracle language model)")->check(CLI::ExistingFile);
  c->add_option("--query", correct.query, "Question to answer");
  c->add_option("--input-file", correct.input_file, "File holding the question")->check(CLI::ExistingFile);
  c->add_flag("--no-rag", correct.flags.no_rag, "Disable retrieval");
  c->add_flag("--no-firewall", correct.flags.no_firewall, "Disable the entity firewall");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a seeded noisy observation fixture");
  add_common(g, gen.flags, false);
  g->add_option("--kb", gen.flags.kb, "Knowledge base file")->required()->check(CLI::ExistingFile);
  g->add_option("--entity", gen.entity, "Entity to describe (default: first in the KB)");
  g->add_option("--out", gen.out_path, "Output path")->required();
  auto add_noise = [](CLI::App* cmd, GenerateArgs& n) {
    n.sentences_opt = cmd->add_option("--sentences", n.sentences, "Sentences per response")->check(CLI::NonNegativeNumber);
    n.facts_opt = cmd->add_option("--facts-per-sentence", n.facts, "Facts per sentence")->check(CLI::PositiveNumber);
    n.swap_opt = cmd->add_option("--p-swap", n.p_swap, "Entity drift probability")->check(CLI::Range(0.0, 1.0));
    n.corrupt_opt = cmd->add_option("--p-corrupt", n.p_corrupt, "Per-fact corruption probability")->check(CLI::Range(0.0, 1.0));
    n.fabricate_opt =
        cmd->add_option("--p-fabricate", n.p_fabricate, "Per-sentence fabrication probability")->check(CLI::Range(0.0, 1.0));
  };
  add_noise(g, gen);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Run seeded episodes and write metrics CSV");
  add_common(s, sim.noise.flags, false);
  s->add_option("--kb", sim.noise.flags.kb, "Knowledge base file")->required()->check(CLI::ExistingFile);
  s->add_option("--density", sim.density, "low, high or both")->check(CLI::IsMember({"low", "high", "both"}));
  sim.noise.flags.group_opt = s->add_option("--max-group-size", sim.noise.flags.max_group_size, "Chunk check groups");
  s->add_option("--episodes", sim.episodes, "Number of episodes")->check(CLI::NonNegativeNumber);
  s->add_flag("--mixed-noise", sim.mixed, "Cycle noise rates over 0, 0.1, 0.2, 0.4");
  s->add_option("--threads", sim.threads, "Episodes run in parallel")->check(CLI::PositiveNumber);
  s->add_flag("--no-rag", sim.noise.flags.no_rag, "Disable retrieval");
  s->add_flag("--no-firewall", sim.noise.flags.no_firewall, "Disable the entity firewall");
  add_noise(s, sim.noise);

  AblateArgs abl;
  auto* ab = app.add_subcommand("ablate", "Compare the full decoder with one component removed");
  add_common(ab, abl.flags, false);
  ab->add_option("which", abl.which, "no-rag, no-firewall or high-density")
      ->required()
      ->check(CLI::IsMember({"no-rag", "no-firewall", "high-density"}));
  ab->add_option("--kb", abl.flags.kb, "Knowledge base file")->required()->check(CLI::ExistingFile);
  ab->add_option("--noisy", abl.noisy, "Fixture (default: a seeded episode)")->check(CLI::ExistingFile);
  ab->add_option("--query", abl.query, "Question to answer");

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "Recompute the metrics row from a saved trace");
  r->add_option("--trace", rep.trace, "Trace file")->required()->check(CLI::ExistingFile);
  r->add_option("--kb", rep.kb, "Knowledge base file")->required()->check(CLI::ExistingFile);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*c) return cmd_correct(correct, out, err);
    if (*g) return cmd_generate(gen, out, err);
    if (*s) return cmd_simulate(sim, out, err);
    if (*ab) return cmd_ablate(abl, out, err);
    if (*r) return cmd_report(rep, out, err);
  } catch (const UsageError& e) {
    err << "serc: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "serc: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace serc::cli
