// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "completion/aggregation.hpp"
#include "completion/errors.hpp"
#include "completion/evaluation.hpp"
#include "completion/recurrent_net.hpp"
#include "completion/seeding.hpp"
#include "completion/sequence_data.hpp"

namespace completion::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kConfigEcho = "config.toml";

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Written as a [subcommand] section so it can be passed back via --config.
void echo_config(const CLI::App& cmd, const fs::path& dir) {
  write_text(dir / kConfigEcho,
             "[" + cmd.get_name() + "]\n" + cmd.config_to_str(true, false));
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create '" + dir.string() + "': " + ec.message());
}

// ---------------------------------------------------------------------------

struct DataOptions {
  fs::path data;
  fs::path split;
  std::string leave_out;

  void add(CLI::App& cmd) {
    cmd.add_option("--data", data,
                   "Dataset directory (features/ and annotations.jsonl)")
        ->required();
    cmd.add_option("--split", split,
                   "Split file (default: <data>/split.jsonl)");
    cmd.add_option("--leave-out", leave_out,
                   "Hold out this subject instead of using a split file");
  }

  Dataset load() const {
    return load_dataset(data / "features", data / "annotations.jsonl");
  }

  DatasetSplit resolve(const Dataset& ds) const {
    if (!leave_out.empty()) {
      for (auto& s : make_split(ds.annotations, LeaveOneSubjectOut{})) {
        if (s.name == leave_out) return s;
      }
      throw DataError("no sequences for subject '" + leave_out + "'");
    }
    const fs::path path = split.empty() ? data / "split.jsonl" : split;
    return make_split(ds.annotations, FixedSplit{read_split_file(path)}).front();
  }
};

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
  fs::path out;
  SynthConfig config;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
};

void setup_synth(CLI::App& app, SynthOptions& o) {
  auto* cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  cmd->fallthrough();
  cmd->add_option("--out", o.out, "Output directory")->required();
  cmd->add_option("--n", o.config.n_sequences, "Number of sequences")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--p-inc", o.config.p_incomplete,
                  "Probability that a sequence is incomplete")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  cmd->add_option("--dim", o.config.dim, "Feature dimension")
      ->check(CLI::Range(2, 1 << 20))
      ->capture_default_str();
  cmd->add_option("--t-min", o.config.min_length, "Shortest sequence")
      ->check(CLI::Range(2, 1 << 20))
      ->capture_default_str();
  cmd->add_option("--t-max", o.config.max_length, "Longest sequence")
      ->check(CLI::Range(2, 1 << 20))
      ->capture_default_str();
  cmd->add_option("--noise", o.config.noise, "Feature noise std-dev")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--subjects", o.config.n_subjects,
                  "Number of subjects (0: none)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--test-fraction", o.test_fraction,
                  "Fraction of sequences in the test split")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
}

int cmd_synth(const CLI::App& cmd, const SynthOptions& o, std::ostream& out) {
  o.config.validate();
  const Dataset ds = synthesize_dataset(o.config, o.seed);
  make_dir(o.out);
  save_dataset(o.out / "features", o.out / "annotations.jsonl", ds);

  // Test ids: a seeded permutation prefix; the file lists ids in dataset
  // order.
  std::vector<std::size_t> order(ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(derive_seed(o.seed, "split"));
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(uniform01(rng) * i)]);
  }
  const auto n_test = static_cast<std::size_t>(
      std::llround(o.test_fraction * static_cast<double>(ds.size())));
  std::vector<bool> is_test(ds.size(), false);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;
  std::vector<SplitEntry> entries;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    entries.push_back({ds.sequences[i].id(),
                       is_test[i] ? SplitRole::Test : SplitRole::Train});
  }
  write_split_file(o.out / "split.jsonl", entries);
  echo_config(cmd, o.out);

  std::size_t incomplete = 0;
  for (const auto& a : ds.annotations) incomplete += a.is_complete() ? 0 : 1;
  out << fmt::format("wrote {} sequences ({} incomplete, {} test) to {}\n",
                     ds.size(), incomplete, n_test, o.out.string());
  return kOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  DataOptions data;
  fs::path out;
  TrainConfig config;
};

void setup_train(CLI::App& app, TrainOptions& o) {
  auto* cmd = app.add_subcommand("train", "Train the voting node");
  cmd->fallthrough();
  o.data.add(*cmd);
  cmd->add_option("--out", o.out, "Output directory")->required();
  cmd->add_option("--epochs", o.config.epochs)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--lr", o.config.learning_rate, "Initial learning rate")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--decay-after", o.config.decay_after_epochs,
                  "Epochs before the learning rate decays")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--decay-factor", o.config.decay_factor)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--hidden", o.config.hidden_dim, "LSTM hidden size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--proj", o.config.projection_dim,
                  "Projection size (0: input dimension)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--seed", o.config.seed)->capture_default_str();
  cmd->add_option("--clip", o.config.clip_norm, "Gradient norm clip (0: off)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
}

int cmd_train(const CLI::App& cmd, const TrainOptions& o, std::ostream& out) {
  o.config.validate();
  const Dataset ds = o.data.load();
  const DatasetSplit split = o.data.resolve(ds);
  const Dataset train_set = select(ds, split.train_ids);
  if (train_set.size() == 0) throw DataError("split has no training sequences");

  const NetShape shape = o.config.shape_for(train_set.sequences.front().dim());
  auto result =
      train(ModelParams::random(shape, o.config.seed), train_set, o.config,
            [&out](int epoch, double loss) {
              out << fmt::format("epoch {:3d}  loss {:.6f}\n", epoch, loss);
            });

  make_dir(o.out);
  save_checkpoint(o.out / "model.cmp", result.params);
  write_loss_trace(o.out / "loss.csv", result.epoch_loss);
  echo_config(cmd, o.out);
  return kOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  DataOptions data;
  fs::path model;
  fs::path out;
  std::string action = "synthetic";
  std::string schemes = "Pre-V,LastR,C-C,R-R,R-C,C-R";
  VoteParams votes;
  std::vector<std::string> vote_dump;
};

void setup_eval(CLI::App& app, EvalOptions& o) {
  auto* cmd = app.add_subcommand("eval", "Predict and score a test split");
  cmd->fallthrough();
  o.data.add(*cmd);
  cmd->add_option("--model", o.model, "Checkpoint file")->required();
  cmd->add_option("--out", o.out, "Output directory")->required();
  cmd->add_option("--action", o.action, "Action name used in reports")
      ->capture_default_str();
  cmd->add_option("--schemes", o.schemes, "Comma-separated schemes")
      ->capture_default_str();
  cmd->add_option("--sigma", o.votes.sigma, "Regression vote width (frames)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--beta", o.votes.beta, "Regression vote amplitude")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--alpha", o.votes.alpha, "Regression window, fraction of T")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--vote-dump", o.vote_dump,
                  "Write accumulated vote vectors of these sequence ids");
}

std::vector<Scheme> parse_scheme_list(const std::string& text) {
  std::vector<Scheme> schemes;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    auto s = parse_scheme(token);
    if (!s) throw ConfigError("unknown scheme '" + token + "'");
    if (std::find(schemes.begin(), schemes.end(), *s) == schemes.end()) {
      schemes.push_back(*s);
    }
  }
  if (schemes.empty()) throw ConfigError("no schemes requested");
  return schemes;
}

void write_reports(const EvaluationReport& report, const fs::path& dir) {
  write_text(dir / "report.txt",
             render_report(report, ReportFormat::SummaryTable));
  write_text(dir / "breakdown.txt",
             render_report(report, ReportFormat::BreakdownTable));
  write_text(dir / "report.json", render_report(report, ReportFormat::Json));
}

int cmd_eval(const CLI::App& cmd, const EvalOptions& o, std::ostream& out) {
  o.votes.validate();
  const auto schemes = parse_scheme_list(o.schemes);
  const ModelParams params = load_checkpoint(o.model);
  const Dataset ds = o.data.load();
  const DatasetSplit split = o.data.resolve(ds);
  const Dataset test_set = select(ds, split.test_ids);
  if (test_set.size() == 0) throw DataError("split has no test sequences");
  for (const auto& id : o.vote_dump) {
    if (!test_set.find(id)) {
      throw DataError("--vote-dump: sequence '" + id + "' is not in the test set");
    }
  }

  make_dir(o.out);
  make_dir(o.out / "curves");
  if (!o.vote_dump.empty()) make_dir(o.out / "votes");

  std::vector<SequenceRecord> records;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const auto& seq = test_set.sequences[i];
    const auto outputs = forward_sequence(params, seq);
    const bool dump = std::find(o.vote_dump.begin(), o.vote_dump.end(),
                                seq.id()) != o.vote_dump.end();
    for (Scheme s : schemes) {
      const MomentPrediction p = predict(outputs, s, o.votes);
      records.push_back(make_record(seq.id(), o.action, s, seq.length(), p.tau,
                                    test_set.annotations[i].tau()));
      if (dump) {
        std::string csv = "j,value\n";
        for (int j = 1; j <= p.votes.length() + 1; ++j) {
          csv += fmt::format("{},{:.17g}\n", j, p.votes.at(j));
        }
        write_text(o.out / "votes" /
                       fmt::format("{}_{}.csv", seq.id(), scheme_name(s)),
                   csv);
      }
    }
  }

  const EvaluationReport report = aggregate(records, test_set.annotations);
  write_predictions(o.out / "predictions.jsonl", report.records);
  write_reports(report, o.out);
  for (const auto& [scheme, result] : report.overall.schemes) {
    write_text(o.out / "curves" /
                   fmt::format("{}_{}.csv", o.action, scheme_name(scheme)),
               render_curve_csv(result.curve));
  }
  echo_config(cmd, o.out);
  out << render_report(report, ReportFormat::BreakdownTable);
  return kOk;
}

// ---------------------------------------------------------------------------
// report

struct ReportOptions {
  std::vector<fs::path> inputs;
  fs::path out;
  bool breakdown = false;
};

void setup_report(CLI::App& app, ReportOptions& o) {
  auto* cmd = app.add_subcommand("report", "Merge per-action reports");
  cmd->fallthrough();
  cmd->add_option("--in", o.inputs, "report.json files from eval")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "Output directory (default: stdout only)");
  cmd->add_flag("--breakdown", o.breakdown,
                "Print complete/incomplete/total rows per action");
}

int cmd_report(const CLI::App& cmd, const ReportOptions& o, std::ostream& out) {
  std::vector<EvaluationReport> reports;
  for (const auto& path : o.inputs) {
    try {
      reports.push_back(parse_report_json(read_text(path)));
    } catch (const DataError& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }
  const EvaluationReport merged = merge_reports(reports);
  if (!o.out.empty()) {
    make_dir(o.out);
    write_reports(merged, o.out);
    echo_config(cmd, o.out);
  }
  out << render_report(merged, o.breakdown ? ReportFormat::BreakdownTable
                                           : ReportFormat::SummaryTable);
  return kOk;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Action completion-moment detection"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "TOML file with [synth], [train], [eval] or [report] sections");
  app.allow_config_extras(CLI::config_extras_mode::error);
  SynthOptions synth;
  TrainOptions train_opts;
  EvalOptions eval;
  ReportOptions report;
  setup_synth(app, synth);
  setup_train(app, train_opts);
  setup_eval(app, eval);
  setup_report(app, report);

  std::vector<std::string> storage{"completion"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : storage) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    const CLI::App* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    if (name == "synth") return cmd_synth(*cmd, synth, out);
    if (name == "train") return cmd_train(*cmd, train_opts, out);
    if (name == "eval") return cmd_eval(*cmd, eval, out);
    return cmd_report(*cmd, report, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace completion::cli
