#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "skipstep/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "skipstep");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = skipstep::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "skipstep-cli-tests" / name;
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t line_count(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
}

const std::vector<std::string> kTinyTrain = {"--set", "schedule.T=50", "--set", "train.steps=10",
                                             "--set", "train.batch_size=8", "--set", "denoiser.hidden=[8]",
                                             "--set", "denoiser.embed_dim=4"};

std::vector<std::string> with(std::vector<std::string> base, const std::vector<std::string>& extra) {
    base.insert(base.end(), extra.begin(), extra.end());
    return base;
}

}  // namespace

TEST_CASE("train writes a checkpoint and a loss trace, reproducibly") {
    const fs::path a = fresh_dir("train-a"), b = fresh_dir("train-b");
    const Outcome first = run(with({"train", "-o", a.string()}, kTinyTrain));
    REQUIRE(first.code == 0);
    CHECK(fs::exists(a / "model.ckpt"));
    CHECK(line_count(a / "loss_trace.csv") == 11);
    REQUIRE(run(with({"train", "-o", b.string()}, kTinyTrain)).code == 0);
    CHECK(slurp(a / "model.ckpt") == slurp(b / "model.ckpt"));

    const fs::path s = fresh_dir("sample-from-ckpt");
    fs::create_directories(s);
    fs::copy_file(a / "model.ckpt", s / "model.ckpt");
    const Outcome sampled = run({"sample", "-o", s.string(), "--set", "schedule.T=50", "--set",
                                 "denoiser.source=checkpoint", "--set", "denoiser.checkpoint=model.ckpt", "--set",
                                 "sampler.n=20", "--set", "sampler.steps=5"});
    CHECK(sampled.code == 0);
    CHECK(line_count(s / "samples.csv") == 21);
}

TEST_CASE("verbose train prints the loss trace") {
    const fs::path quiet = fresh_dir("train-quiet"), loud = fresh_dir("train-loud");
    const Outcome q = run(with({"train", "-o", quiet.string()}, kTinyTrain));
    const Outcome v = run(with({"train", "-v", "-o", loud.string()}, kTinyTrain));
    REQUIRE(q.code == 0);
    REQUIRE(v.code == 0);
    CHECK(q.out.find("step 0 loss") == std::string::npos);
    CHECK(v.out.find("step 0 loss") != std::string::npos);
}

TEST_CASE("an invalid loss mode is a configuration error naming the field") {
    const Outcome o = run({"train", "-o", fresh_dir("bad-loss").string(), "--set", "train.loss=huber"});
    CHECK(o.code == 2);
    CHECK(o.err.find("train.loss") != std::string::npos);
}

TEST_CASE("sample writes n rows and is byte-reproducible") {
    const fs::path a = fresh_dir("sample-a"), b = fresh_dir("sample-b");
    const std::vector<std::string> args = {"--set", "sampler.kind=skipped", "--set", "sampler.steps=25",
                                           "--set", "sampler.n=300", "--set", "dataset.mean=[0.5,-0.5]",
                                           "--set", "dataset.var=[0.3,1.2]"};
    REQUIRE(run(with({"sample", "-o", a.string()}, args)).code == 0);
    REQUIRE(run(with({"sample", "-o", b.string()}, args)).code == 0);
    CHECK(line_count(a / "samples.csv") == 301);
    CHECK(slurp(a / "samples.csv") == slurp(b / "samples.csv"));
    CHECK(fs::exists(a / "samples.svg"));
}

TEST_CASE("mixed cutoff out of range exits with a configuration error") {
    const Outcome o = run({"sample", "-o", fresh_dir("bad-cutoff").string(), "--set", "sampler.kind=mixed", "--set",
                           "sampler.steps=25", "--set", "sampler.cutoff_index=26"});
    CHECK(o.code == 2);
}

TEST_CASE("usage and file errors map to exit codes") {
    const Outcome steps = run({"sample", "-o", fresh_dir("too-many").string(), "--set", "schedule.T=10"});
    CHECK(steps.code == 2);
    CHECK(steps.err.find("sampler.steps") != std::string::npos);
    CHECK(run({}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"sample", "--no-such-flag"}).code == 2);
    CHECK(run({"sample", "--set", "sampler.bogus=1", "-o", fresh_dir("bogus").string()}).code == 2);
    const Outcome missing = run({"sample", "-c", "/nonexistent/config.json", "-o", fresh_dir("missing").string()});
    CHECK(missing.code == 3);
    const Outcome ckpt = run({"sample", "-o", fresh_dir("no-ckpt").string(), "--set", "denoiser.source=checkpoint",
                              "--set", "denoiser.checkpoint=/nonexistent/model.ckpt"});
    CHECK(ckpt.code == 3);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("output directory defaults to the environment variable") {
    const fs::path dir = fresh_dir("from-env");
    ::setenv(skipstep::kOutputDirEnv, dir.c_str(), 1);
    const Outcome o = run({"sample", "--set", "sampler.n=10", "--set", "sampler.steps=5"});
    ::unsetenv(skipstep::kOutputDirEnv);
    CHECK(o.code == 0);
    CHECK(fs::exists(dir / "samples.csv"));
}

TEST_CASE("bench and ablate write their tables") {
    const fs::path dir = fresh_dir("bench");
    const std::vector<std::string> small = {"--set", "schedule.T=100", "--set", "bench.samples=100", "--set",
                                            "bench.seeds=[0]", "--set", "bench.budgets=[10,5]", "--set",
                                            "bench.n_proj=8", "--set", "bench.ablation_budget=10"};
    REQUIRE(run(with({"bench", "-o", dir.string()}, small)).code == 0);
    CHECK(line_count(dir / "sweep.csv") == 1 + 4 * 2);
    REQUIRE(run(with({"ablate", "-o", dir.string()}, small)).code == 0);
    CHECK(line_count(dir / "ablation.csv") == 1 + 6);
    CHECK(fs::exists(dir / "ablation.svg"));
}

TEST_CASE("verify passes, and fails loudly with a corrupted coefficient") {
    const fs::path dir = fresh_dir("verify");
    const Outcome ok = run({"verify", "-o", dir.string(), "--mc-samples", "20000", "--set", "schedule.T=5"});
    CHECK(ok.code == 0);
    CHECK(ok.out.find("PASS schedule.bruteforce_posterior_T5") != std::string::npos);
    CHECK(fs::exists(dir / "verify.txt"));

    const Outcome bad = run({"verify", "-o", dir.string(), "--mc-samples", "20000", "--inject-fault", "coef"});
    CHECK(bad.code == 1);
    CHECK(bad.out.find("FAIL schedule.") != std::string::npos);
}
