// Runs the full CLI pipeline (synth -> annotate -> train -> score -> rerank
// -> eval) with a pinned configuration and compares the metrics report
// byte-for-byte against the committed golden file. Regenerate with
// tests/golden/regenerate.sh after an intentional behavior change.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return {};
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

int run(const std::string& command) {
  std::fprintf(stderr, "+ %s\n", command.c_str());
  return std::system(command.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli, golden;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--cli") cli = argv[i + 1];
    if (std::string(argv[i]) == "--golden") golden = argv[i + 1];
  }
  if (cli.empty() || golden.empty()) {
    std::fprintf(stderr, "usage: golden_pipeline --cli <vernet binary> --golden <metrics.tsv>\n");
    return 2;
  }

  const fs::path dir = fs::temp_directory_path() / "vernet_golden_pipeline";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const std::string model_cfg =
      "--set dim=16 --set layers=1 --set heads=2 --set ff_dim=32 --set lr=1e-3 "
      "--set batch_groups=2 --set accum_steps=1 --set epochs=2";
  const fs::path train_data = dir / "train.jsonl";
  const fs::path eval_data = dir / "eval.jsonl";
  const fs::path labeled = dir / "labeled.jsonl";
  const fs::path ckpt = dir / "model.ckpt";
  const fs::path scored = dir / "scored.jsonl";
  const fs::path reranked = dir / "reranked.jsonl";
  const fs::path weights = dir / "weights.tsv";
  const fs::path report = dir / "metrics.tsv";

  int rc = 0;
  rc |= run(cli + " synth --seed 9 --k 3 --set groups=120 --out " + train_data.string());
  rc |= run(cli + " synth --seed 10 --k 3 --set groups=40 --out " + eval_data.string());
  rc |= run(cli + " annotate --in " + eval_data.string() + " --out " + labeled.string());
  rc |= run(cli + " train " + model_cfg + " --seed 9 --in " + train_data.string() +
            " --dev " + eval_data.string() + " --checkpoint " + ckpt.string() + " > /dev/null");
  rc |= run(cli + " score --checkpoint " + ckpt.string() + " --in " + eval_data.string() +
            " --out " + scored.string());
  rc |= run(cli + " rerank --seed 9 --in " + scored.string() + " --out " + reranked.string() +
            " --learn-weights " + weights.string());
  rc |= run(cli + " eval --in " + eval_data.string() + " --sys " + reranked.string() + " --out " +
            report.string() + " > /dev/null");
  if (rc != 0) {
    std::fprintf(stderr, "golden pipeline: a stage failed\n");
    return 1;
  }

  const std::string got = slurp(report);
  const std::string want = slurp(golden);
  if (got.empty()) {
    std::fprintf(stderr, "golden pipeline: empty metrics report\n");
    return 1;
  }
  if (got != want) {
    std::fprintf(stderr, "golden pipeline: metrics diverge from %s\ngot:\n%s\nwant:\n%s\n",
                 golden.c_str(), got.c_str(), want.c_str());
    return 1;
  }
  std::printf("golden pipeline: metrics match %s\n", golden.c_str());
  fs::remove_all(dir);
  return 0;
}
