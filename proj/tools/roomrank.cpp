/* Copyright 2026 The RoomRank Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
// Command-line front end for the room ranking pipeline. Results that scripts
// consume go to stdout; progress and diagnostics go to stderr. Exit codes:
// 0 success, 1 runtime failure, 2 usage error.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "roomrank/roomrank.hpp"

namespace fs = std::filesystem;

namespace {

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

struct GenCorpusArgs {
  int count = 0;
  std::uint64_t seed = 42;
  int fs = 16000;
  std::string out;
};

int run_gen_corpus(const GenCorpusArgs& a) {
  const auto manifest = roomrank::sample_corpus(a.count, a.seed, a.fs, a.out);
  const auto counts = roomrank::count_by_class(manifest);
  for (const char* cls : {"small", "medium", "large"}) {
    const auto it = counts.find(cls);
    std::printf("%s=%d\n", cls, it == counts.end() ? 0 : it->second);
  }
  std::fprintf(stderr, "wrote %zu impulse responses under %s\n", manifest.entries.size(),
               a.out.c_str());
  return 0;
}

struct TrainArgs {
  std::string ratings;
  std::string audio;
  std::string out;
  std::string log;
  int synthetic = 0;
  int epochs = 50;
  std::uint64_t seed = 42;
};

int run_train(const TrainArgs& a) {
  fs::path ratings_path = a.ratings;
  const fs::path audio_dir = a.audio;
  if (a.synthetic > 0) {
    std::fprintf(stderr, "generating %d synthetic notes under %s\n", a.synthetic,
                 audio_dir.string().c_str());
    const auto synthetic = roomrank::generate_synthetic_labeled_corpus(a.synthetic, a.seed, audio_dir);
    ratings_path = synthetic.ratings_path;
  }

  const auto ratings = roomrank::read_ratings_csv(ratings_path);
  const auto split = roomrank::build_training_set(ratings, a.seed);
  std::fprintf(stderr, "loading %zu train / %zu validation notes\n", split.train.size(),
               split.validation.size());

  const auto load_examples = [&audio_dir](const std::vector<roomrank::LabeledExample>& items) {
    std::vector<roomrank::TrainExample> examples;
    examples.reserve(items.size());
    for (const auto& item : items) {
      fs::path p = item.audio_path;
      if (p.is_relative()) p = audio_dir / p;
      examples.push_back({roomrank::pipeline_mel(roomrank::read_wav(p)), item.label});
    }
    return examples;
  };
  const auto train_set = load_examples(split.train);
  const auto val_set = load_examples(split.validation);

  roomrank::TrainConfig config;
  config.seed = a.seed;
  config.epochs = a.epochs;
  const auto result = roomrank::train(train_set, val_set, config, [&](const auto& row) {
    std::fprintf(stderr, "epoch %d/%d train=%.6f val=%.6f lr=%.2e\n", row.epoch, config.epochs,
                 row.train_loss, row.val_loss, row.lr);
  });

  roomrank::save_model(result.model, a.out);
  const fs::path log_path = a.log.empty() ? fs::path(a.out + ".log.csv") : fs::path(a.log);
  roomrank::write_training_log(log_path, result.log);
  std::printf("best_val_loss=%.6f accuracy=%.4f\n", result.best_val_loss,
              roomrank::threshold_accuracy(result.model, val_set));
  return 0;
}

int run_score(const std::string& model_path, const std::string& in) {
  const auto model = roomrank::load_model(model_path);
  std::printf("%.4f\n", roomrank::score_note(roomrank::read_wav(in), model));
  return 0;
}

struct EnhanceArgs {
  std::string model;
  std::string corpus;
  std::string in;
  std::string out;
  std::string report;
  int top_k = 10;
  int workers = 0;  // 0 = ROOMRANK_WORKERS, else hardware
};

int run_enhance(const EnhanceArgs& a) {
  const auto model = roomrank::load_model(a.model);
  const auto corpus = roomrank::prepare_corpus(a.corpus, a.workers);
  for (const auto& failure : corpus.failures) {
    std::fprintf(stderr, "skipped IR %s\n", failure.c_str());
  }
  std::fprintf(stderr, "scoring against %zu impulse responses\n", corpus.entries.size());

  const auto note = roomrank::read_wav(a.in);
  const auto enhanced = roomrank::enhance(note, a.in, corpus, model, a.top_k, a.workers);
  roomrank::write_wav(a.out, enhanced.enhanced.audio, roomrank::WavEncoding::kFloat32);
  roomrank::write_note_report(a.report, enhanced.result);
  std::printf("original=%.4f best=%.4f room=%s point=%s\n", enhanced.result.original_score,
              enhanced.result.best_score, enhanced.result.best_ir.room_id.c_str(),
              enhanced.result.best_ir.point_id.c_str());
  return 0;
}

struct StatsArgs {
  std::string model;
  std::string corpus;
  std::string notes;
  std::string out;
  double threshold = 0.5;
  int top_k = 10;
  int workers = 0;
  bool traces = false;
};

void write_traces(const StatsArgs& a, const roomrank::LoadedCorpus& corpus,
                  const std::vector<roomrank::RankedResult>& results) {
  const fs::path trace_dir = fs::path(a.out) / "traces";
  fs::create_directories(trace_dir);
  for (const auto& r : results) {
    roomrank::AudioBuffer dry = roomrank::canonicalize(roomrank::read_wav(r.note_path));
    roomrank::peak_normalize(dry);
    const std::string stem = fs::path(r.note_path).stem().string();
    roomrank::write_feature_csv(trace_dir / (stem + "_original.csv"), roomrank::feature_trace(dry));

    roomrank::AudioBuffer wet = dry;
    if (r.best_index >= 0) {
      const auto& entry = corpus.manifest.entries[static_cast<std::size_t>(r.best_index)];
      wet = roomrank::apply_room(roomrank::canonicalize(roomrank::read_wav(r.note_path)),
                                 roomrank::load_corpus_ir(corpus.root, entry))
                .audio;
    }
    roomrank::write_feature_csv(trace_dir / (stem + "_enhanced.csv"), roomrank::feature_trace(wet));
  }
}

int run_stats(const StatsArgs& a) {
  const auto model = roomrank::load_model(a.model);
  const auto corpus = roomrank::prepare_corpus(a.corpus, a.workers);
  for (const auto& failure : corpus.failures) {
    std::fprintf(stderr, "skipped IR %s\n", failure.c_str());
  }

  std::vector<fs::path> wav_paths;
  for (const auto& entry : fs::directory_iterator(a.notes)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      wav_paths.push_back(entry.path());
    }
  }
  std::sort(wav_paths.begin(), wav_paths.end());

  std::vector<roomrank::NoteInput> notes;
  for (const auto& p : wav_paths) {
    try {
      notes.push_back({p.string(), roomrank::read_wav(p)});
    } catch (const std::exception& e) {
      std::fprintf(stderr, "skipping note %s: %s\n", p.string().c_str(), e.what());
    }
  }
  std::fprintf(stderr, "scoring %zu notes against %zu impulse responses\n", notes.size(),
               corpus.entries.size());

  const auto stats =
      roomrank::batch_stats(notes, corpus, model, a.threshold, a.top_k, a.workers);

  const fs::path out_dir = a.out;
  fs::create_directories(out_dir);
  roomrank::write_histogram_csv(out_dir / "histogram_before.csv", stats.histogram_before, 0.0, 1.0);
  roomrank::write_histogram_csv(out_dir / "histogram_after.csv", stats.histogram_after, 0.0, 1.0);
  roomrank::write_histogram_csv(out_dir / "histogram_delta.csv", stats.histogram_delta, -1.0, 1.0);
  roomrank::write_stats_summary(out_dir / "summary.json", stats);
  roomrank::write_batch_report(out_dir / "report.json", stats.results);
  if (a.traces) write_traces(a, corpus, stats.results);

  std::printf("n_notes=%d fraction_improved=%.4f median_delta=%.6f\n", stats.n_notes,
              stats.fraction_improved, stats.median_delta);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Find the room in which a musical note sounds best"};
  app.require_subcommand(1);

  GenCorpusArgs gen_args;
  auto* gen = app.add_subcommand("gen-corpus", "Render a corpus of room impulse responses");
  gen->add_option("--count", gen_args.count, "Number of impulse responses")
      ->required()
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_args.seed, "Random seed")->capture_default_str();
  gen->add_option("--fs", gen_args.fs, "Sample rate in Hz")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_args.out, "Output directory")->required();

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train the perceptual scorer on rated notes");
  train->add_option("--ratings", train_args.ratings, "Ratings CSV (audio_path,rater_id,rating)")
      ->check(CLI::ExistingFile);
  train->add_option("--audio", train_args.audio, "Directory holding the rated notes")->required();
  train->add_option("--out", train_args.out, "Output model file")->required();
  train->add_option("--log", train_args.log, "Training log CSV (default: <out>.log.csv)");
  train->add_option("--synthetic", train_args.synthetic,
                    "Generate this many synthetic rated notes into --audio first")
      ->check(CLI::PositiveNumber);
  train->add_option("--epochs", train_args.epochs, "Training epochs")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train->add_option("--seed", train_args.seed, "Random seed")->capture_default_str();

  std::string score_model, score_in;
  auto* score = app.add_subcommand("score", "Score a single note");
  score->add_option("--model", score_model, "Scorer model file")
      ->required()
      ->check(CLI::ExistingFile);
  score->add_option("--in", score_in, "Input note WAV")->required()->check(CLI::ExistingFile);

  EnhanceArgs enhance_args;
  auto* enhance = app.add_subcommand("enhance", "Pick the best room for a note");
  enhance->add_option("--model", enhance_args.model, "Scorer model file")
      ->required()
      ->check(CLI::ExistingFile);
  enhance->add_option("--corpus", enhance_args.corpus, "Corpus directory (manifest.json + irs/)")
      ->required()
      ->check(CLI::ExistingDirectory);
  enhance->add_option("--in", enhance_args.in, "Input note WAV")
      ->required()
      ->check(CLI::ExistingFile);
  enhance->add_option("--out", enhance_args.out, "Enhanced note WAV")->required();
  enhance->add_option("--report", enhance_args.report, "Report JSON path")->required();
  enhance->add_option("--top-k", enhance_args.top_k, "Ranking entries to report")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  enhance->add_option("--workers", enhance_args.workers,
                      "Worker threads (default: ROOMRANK_WORKERS or hardware)")
      ->check(CLI::PositiveNumber);

  StatsArgs stats_args;
  auto* stats = app.add_subcommand("stats", "Enhance every low-scoring note in a directory");
  stats->add_option("--model", stats_args.model, "Scorer model file")
      ->required()
      ->check(CLI::ExistingFile);
  stats->add_option("--corpus", stats_args.corpus, "Corpus directory (manifest.json + irs/)")
      ->required()
      ->check(CLI::ExistingDirectory);
  stats->add_option("--notes", stats_args.notes, "Directory of note WAVs")
      ->required()
      ->check(CLI::ExistingDirectory);
  stats->add_option("--out", stats_args.out, "Output directory for reports")->required();
  stats->add_option("--threshold", stats_args.threshold, "Enhance notes scoring below this")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  stats->add_option("--top-k", stats_args.top_k, "Ranking entries to report per note")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  stats->add_option("--workers", stats_args.workers,
                    "Worker threads (default: ROOMRANK_WORKERS or hardware)")
      ->check(CLI::PositiveNumber);
  stats->add_flag("--traces", stats_args.traces,
                  "Write per-note envelope/centroid CSVs for dry and enhanced audio");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (gen->parsed()) return guarded([&] { return run_gen_corpus(gen_args); });
  if (train->parsed()) {
    if (train_args.synthetic == 0 && train_args.ratings.empty()) {
      std::fprintf(stderr, "error: either --ratings or --synthetic is required\n");
      return 2;
    }
    if (train_args.synthetic == 0 && !fs::is_directory(train_args.audio)) {
      std::fprintf(stderr, "error: --audio directory does not exist: %s\n",
                   train_args.audio.c_str());
      return 2;
    }
    return guarded([&] { return run_train(train_args); });
  }
  if (score->parsed()) return guarded([&] { return run_score(score_model, score_in); });
  if (enhance->parsed()) return guarded([&] { return run_enhance(enhance_args); });
  if (stats->parsed()) return guarded([&] { return run_stats(stats_args); });
  return 2;
}
