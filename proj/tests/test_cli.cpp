// End-to-end tests driving the command-line binary as a subprocess.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "svdd/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

#define SVDD_STR2(x) #x
#define SVDD_STR(x) SVDD_STR2(x)

namespace {

const std::string kCli = SVDD_STR(SVDD_CLI_PATH);

struct CmdResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr interleaved
};

CmdResult run_cmd(const std::string& cmd) {
    FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed for: " + cmd);
    std::string out;
    char buf[4096];
    while (std::fgets(buf, sizeof buf, pipe)) out += buf;
    const int status = pclose(pipe);
    CmdResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.output = std::move(out);
    return result;
}

std::size_t line_count(const std::string& path) {
    std::size_t n = 0;
    for (const std::string& line : svdd::split_on(svdd::read_text_file(path), '\n'))
        if (!line.empty()) ++n;
    return n;
}

// Shared fixture: synthetic datasets plus one full clean+eval run, built once.
struct Demo {
    std::string dir;
    std::string data;        // 2x600, dim 8, far_point rho 0.05
    std::string vectors;     // precomputed embeddings for `data`
    std::string small_data;  // 2x120, below the class-size floor
    std::string small_vectors;
    std::string run;  // clean+eval output for `data`
};

const Demo& demo() {
    static const Demo d = [] {
        Demo out;
        out.dir = (fs::temp_directory_path() /
                   ("svdd_cli_test_" + std::to_string(::getpid())))
                      .string();
        fs::remove_all(out.dir);
        fs::create_directories(out.dir);
        out.data = out.dir + "/data.jsonl";
        out.vectors = out.dir + "/vectors.jsonl";
        out.small_data = out.dir + "/small.jsonl";
        out.small_vectors = out.dir + "/small_vectors.jsonl";
        out.run = out.dir + "/run";
        auto must = [](const CmdResult& r, const std::string& what) {
            if (r.exit_code != 0)
                throw std::runtime_error("fixture step failed (" + what + "):\n" + r.output);
        };
        must(run_cmd(kCli + " synth --classes 2 --per-class 600 --dim 8 --std 1.0" +
                     " --rho 0.05 --mode far_point --seed 7 --out-data " + out.data +
                     " --out-vectors " + out.vectors + " --out-truth " + out.dir +
                     "/truth.jsonl"),
             "synth");
        must(run_cmd(kCli + " synth --classes 2 --per-class 120 --dim 4 --seed 3" +
                     " --out-data " + out.small_data + " --out-vectors " +
                     out.small_vectors),
             "synth small");
        must(run_cmd(kCli + " clean --data " + out.data +
                     " --embedder precomputed --vectors " + out.vectors +
                     " --dim 8 --epochs-ae 3 --epochs-svdd 5 --seed 11 --out " + out.run),
             "clean");
        must(run_cmd(kCli + " eval --run " + out.run), "eval");
        return out;
    }();
    return d;
}

std::string small_clean_flags(const Demo& d) {
    return " --data " + d.small_data + " --embedder precomputed --vectors " +
           d.small_vectors + " --dim 4 --epochs-ae 2 --epochs-svdd 3" +
           " --allow-small-classes --seed 5";
}

}  // namespace

TEST_CASE("synth writes the dataset, vectors, and truth files") {
    const Demo& d = demo();
    CHECK(line_count(d.data) == 1200);
    CHECK(line_count(d.vectors) == 1200);
    CHECK(line_count(d.dir + "/truth.jsonl") == 1200);
    std::size_t injected = 0;
    for (const std::string& line : svdd::split_on(svdd::read_text_file(d.dir + "/truth.jsonl"), '\n')) {
        if (line.empty()) continue;
        if (json::parse(line).at("is_injected").get<bool>()) ++injected;
    }
    CHECK(injected == 60);
}

TEST_CASE("clean produces the full artifact set with the default sweep") {
    const Demo& d = demo();
    for (const char* name :
         {"config.json", "manifest.json", "embeddings.jsonl", "model_class_0.json",
          "model_class_1.json", "scores_class_0.jsonl", "scores_class_1.jsonl",
          "test_scores_class_0.jsonl", "test_scores_class_1.jsonl", "report_0.200.json",
          "report_0.400.json", "report_0.600.json", "report_0.800.json",
          "report_1.000.json"}) {
        CAPTURE(name);
        CHECK(fs::exists(fs::path(d.run) / name));
    }
    CHECK(line_count(d.run + "/embeddings.jsonl") == 1200);
    CHECK(line_count(d.run + "/scores_class_0.jsonl") == 540);
    CHECK(line_count(d.run + "/test_scores_class_0.jsonl") == 60);

    const json manifest = json::parse(svdd::read_text_file(d.run + "/manifest.json"));
    CHECK(manifest.at("train_ids").size() == 1080);
    CHECK(manifest.at("test_ids").size() == 120);
    CHECK(manifest.at("files").at("reports").size() == 5);

    // The full-coverage report keeps everything.
    const json report = json::parse(svdd::read_text_file(d.run + "/report_1.000.json"));
    CHECK(report.at("kept").get<std::size_t>() == 1080);
    CHECK(report.at("data_coverage_percent").get<double>() == 100.0);
}

TEST_CASE("clean with a single threshold writes exactly one report") {
    const Demo& d = demo();
    const std::string run = d.dir + "/run_single";
    const CmdResult r =
        run_cmd(kCli + " clean" + small_clean_flags(d) + " --threshold 0.6 --out " + run);
    CAPTURE(r.output);
    REQUIRE(r.exit_code == 0);
    CHECK(fs::exists(run + "/report_0.600.json"));
    CHECK(!fs::exists(run + "/report_0.200.json"));
    CHECK(r.output.find("threshold 0.600") != std::string::npos);
}

TEST_CASE("small classes are refused with exit code 3 unless overridden") {
    const Demo& d = demo();
    const CmdResult r = run_cmd(kCli + " clean --data " + d.small_data +
                                " --embedder precomputed --vectors " + d.small_vectors +
                                " --dim 4 --out " + d.dir + "/run_refused");
    CHECK(r.exit_code == 3);
    CHECK(r.output.find("500-sample minimum") != std::string::npos);
    CHECK(r.output.find("--allow-small-classes") != std::string::npos);
}

TEST_CASE("eval writes one row per threshold and classifier, and reruns are byte-identical") {
    const Demo& d = demo();
    const std::string long_csv = svdd::read_text_file(d.run + "/eval_results.csv");
    const auto lines = svdd::split_on(long_csv, '\n');
    CHECK(lines[0] ==
          "dataset,threshold,classifier,n_train,n_inlier,n_outlier,"
          "accuracy,accuracy_inlier,accuracy_outlier,weighted_accuracy");
    CHECK(line_count(d.run + "/eval_results.csv") == 21);  // header + 5 taus x 4 classifiers
    CHECK(line_count(d.run + "/eval_table1.csv") == 6);    // header + 5 taus

    const std::string wide_csv = svdd::read_text_file(d.run + "/eval_table1.csv");
    CHECK(svdd::split_on(wide_csv, '\n')[0] ==
          "dataset,threshold,knn,logistic_regression,lda,decision_tree");

    const std::string json_before = svdd::read_text_file(d.run + "/eval_results.json");
    const CmdResult rerun = run_cmd(kCli + " eval --run " + d.run);
    CAPTURE(rerun.output);
    REQUIRE(rerun.exit_code == 0);
    CHECK(svdd::read_text_file(d.run + "/eval_results.csv") == long_csv);
    CHECK(svdd::read_text_file(d.run + "/eval_table1.csv") == wide_csv);
    CHECK(svdd::read_text_file(d.run + "/eval_results.json") == json_before);
}

TEST_CASE("eval honors a classifier subset override") {
    const Demo& d = demo();
    const std::string run = d.dir + "/run_subset";
    fs::remove_all(run);
    fs::copy(d.run, run, fs::copy_options::recursive);
    const CmdResult r = run_cmd(kCli + " eval --run " + run + " --classifiers knn,lda");
    CAPTURE(r.output);
    REQUIRE(r.exit_code == 0);
    CHECK(line_count(run + "/eval_results.csv") == 11);  // header + 5 taus x 2 classifiers
    CHECK(svdd::split_on(svdd::read_text_file(run + "/eval_table1.csv"), '\n')[0] ==
          "dataset,threshold,knn,lda");

    const CmdResult bad = run_cmd(kCli + " eval --run " + run + " --classifiers svm");
    CHECK(bad.exit_code == 2);
    CHECK(bad.output.find("unknown classifier") != std::string::npos);
}

TEST_CASE("refilter adds reports from persisted scores without retraining") {
    const Demo& d = demo();
    const std::string run = d.dir + "/run_refilter";
    fs::remove_all(run);
    fs::copy(d.run, run, fs::copy_options::recursive);
    fs::remove(run + "/model_class_0.json");  // proves models are not needed
    fs::remove(run + "/model_class_1.json");

    const CmdResult r = run_cmd(kCli + " refilter --run " + run + " --thresholds 0.5,0.7");
    CAPTURE(r.output);
    REQUIRE(r.exit_code == 0);
    CHECK(fs::exists(run + "/report_0.500.json"));
    CHECK(fs::exists(run + "/report_0.700.json"));
    CHECK(r.output.find("threshold 0.500") != std::string::npos);

    const json manifest = json::parse(svdd::read_text_file(run + "/manifest.json"));
    const auto reports = manifest.at("files").at("reports").get<std::vector<std::string>>();
    CHECK(reports.size() == 7);
    CHECK(std::is_sorted(reports.begin(), reports.end()));

    // A refiltered threshold equals the same threshold computed at clean time.
    const std::string run2 = d.dir + "/run_refilter2";
    fs::remove_all(run2);
    fs::copy(d.run, run2, fs::copy_options::recursive);
    const CmdResult r2 = run_cmd(kCli + " refilter --run " + run2 + " --threshold 0.6");
    REQUIRE(r2.exit_code == 0);
    const json a = json::parse(svdd::read_text_file(d.run + "/report_0.600.json"));
    const json b = json::parse(svdd::read_text_file(run2 + "/report_0.600.json"));
    CHECK(a.at("kept") == b.at("kept"));
    CHECK(a.at("classes") == b.at("classes"));

    const CmdResult none = run_cmd(kCli + " refilter --run " + run2);
    CHECK(none.exit_code == 2);
}

TEST_CASE("config file values apply and command-line flags override them") {
    const Demo& d = demo();
    const std::string cfg = d.dir + "/clean.cfg";
    svdd::write_text_file_atomic(
        cfg, "[clean]\ndata=" + d.small_data + "\nembedder=precomputed\nvectors=" +
                 d.small_vectors +
                 "\ndim=4\nepochs-ae=2\nepochs-svdd=3\nallow-small-classes=true\n"
                 "seed=5\nthreshold=0.6\n");
    const std::string run_a = d.dir + "/run_cfg_a";
    const CmdResult a = run_cmd(kCli + " clean --config " + cfg + " --out " + run_a);
    CAPTURE(a.output);
    REQUIRE(a.exit_code == 0);
    CHECK(fs::exists(run_a + "/report_0.600.json"));
    CHECK(json::parse(svdd::read_text_file(run_a + "/config.json")).at("seed") == 5);

    // A flag overrides the file's seed, which changes the split and the scores.
    const std::string run_b = d.dir + "/run_cfg_b";
    const CmdResult b =
        run_cmd(kCli + " clean --config " + cfg + " --seed 99 --out " + run_b);
    REQUIRE(b.exit_code == 0);
    CHECK(json::parse(svdd::read_text_file(run_b + "/config.json")).at("seed") == 99);
    CHECK(svdd::read_text_file(run_a + "/scores_class_0.jsonl") !=
          svdd::read_text_file(run_b + "/scores_class_0.jsonl"));

    // Same config, same seed: score files are byte-identical.
    const std::string run_c = d.dir + "/run_cfg_c";
    const CmdResult c = run_cmd(kCli + " clean --config " + cfg + " --out " + run_c);
    REQUIRE(c.exit_code == 0);
    CHECK(svdd::read_text_file(run_a + "/scores_class_0.jsonl") ==
          svdd::read_text_file(run_c + "/scores_class_0.jsonl"));
    CHECK(svdd::read_text_file(run_a + "/report_0.600.json") ==
          svdd::read_text_file(run_c + "/report_0.600.json"));

    const std::string bad_cfg = d.dir + "/bad.cfg";
    svdd::write_text_file_atomic(bad_cfg, "[clean]\nno-such-option=1\n");
    CHECK(run_cmd(kCli + " clean --config " + bad_cfg + " --data x").exit_code == 2);
    CHECK(run_cmd(kCli + " clean --config " + d.dir + "/missing.cfg --data x").exit_code ==
          2);
}

TEST_CASE("environment variable overrides the remote embedder url") {
    const Demo& d = demo();
    httplib::Server server;
    server.Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
        const json body = json::parse(req.body);
        json embeddings = json::array();
        for (const auto& entry : body.at("texts")) {
            const std::string text = entry.get<std::string>();
            double sum = 0.0;
            for (unsigned char c : text) sum += c;
            embeddings.push_back({sum / 100.0, double(text.size()), 1.0, 0.5});
        }
        res.set_content(json{{"embeddings", embeddings}}.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    // The flag points at a dead port; only the environment override can work.
    const std::string base = kCli + " clean --data " + d.small_data +
                             " --embedder remote --embed-url http://127.0.0.1:1" +
                             " --dim 4 --epochs-ae 2 --epochs-svdd 3" +
                             " --allow-small-classes --threshold 0.6 --out " + d.dir;
    const CmdResult ok = run_cmd("SVDD_CLEAN_EMBED_URL=http://127.0.0.1:" +
                                 std::to_string(port) + " " + base + "/run_env");
    CAPTURE(ok.output);
    CHECK(ok.exit_code == 0);
    CHECK(fs::exists(d.dir + "/run_env/report_0.600.json"));

    server.stop();
    worker.join();

    const CmdResult dead = run_cmd("SVDD_CLEAN_EMBED_URL=http://127.0.0.1:1 " + base +
                                   "/run_env_dead");
    CHECK(dead.exit_code == 3);
    CHECK(dead.output.find("transport error") != std::string::npos);

    const CmdResult unset = run_cmd(kCli + " clean --data " + d.small_data +
                                    " --embedder remote --dim 4 --out " + d.dir +
                                    "/run_env_none");
    CHECK(unset.exit_code == 2);
}

TEST_CASE("oracle prints the exact ball and slack-sorted points") {
    const Demo& d = demo();
    const std::string points = d.dir + "/points.jsonl";
    svdd::write_text_file_atomic(points, "[-1.0, 0.0]\n[1.0, 0.0]\n");
    const CmdResult r = run_cmd(kCli + " oracle --points " + points);
    CAPTURE(r.output);
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("points 2 dim 2") != std::string::npos);
    CHECK(r.output.find("center (0.000000, 0.000000)") != std::string::npos);
    CHECK(r.output.find("radius 1.000000") != std::string::npos);

    // Named points, soft boundary: the slack listing leads with the point
    // carrying the largest violation.
    // Nine clustered points and one distant one: at nu = 0.6 the slack
    // coefficient 1/(nu n) is small enough that excluding the distant point
    // beats inflating the ball, so it ends up with positive slack on top.
    const std::string named = d.dir + "/named_points.jsonl";
    std::string body;
    for (int i = 0; i < 9; ++i)
        body += "{\"id\": \"c" + std::to_string(i) + "\", \"vector\": [0." +
                std::to_string(i) + ", 0.0]}\n";
    body += "{\"id\": \"far\", \"vector\": [10.0, 0.0]}\n";
    svdd::write_text_file_atomic(named, body);
    const CmdResult soft = run_cmd(kCli + " oracle --points " + named + " --nu 0.6");
    CAPTURE(soft.output);
    REQUIRE(soft.exit_code == 0);
    CHECK(soft.output.find("soft radius") != std::string::npos);
    const auto far_pos = soft.output.find("slack far");
    CHECK(far_pos != std::string::npos);
    CHECK(far_pos < soft.output.find("slack c0"));
    const double far_slack = std::stod(soft.output.substr(far_pos + 10));
    CHECK(far_slack > 1.0);

    const std::string ragged = d.dir + "/ragged.jsonl";
    svdd::write_text_file_atomic(ragged, "[0.0, 0.0]\n[1.0]\n");
    const CmdResult bad = run_cmd(kCli + " oracle --points " + ragged);
    CHECK(bad.exit_code == 3);
    CHECK(bad.output.find("line 2") != std::string::npos);
}

TEST_CASE("usage errors exit with code 2 and help exits cleanly") {
    CHECK(run_cmd(kCli).exit_code == 2);                      // missing subcommand
    CHECK(run_cmd(kCli + " bogus").exit_code == 2);           // unknown subcommand
    CHECK(run_cmd(kCli + " clean").exit_code == 2);           // missing --data
    CHECK(run_cmd(kCli + " --help").exit_code == 0);
    CHECK(run_cmd(kCli + " clean --help").exit_code == 0);
    const CmdResult both = run_cmd(
        kCli + " clean --data x --threshold 0.5 --thresholds 0.2,0.4 --out y");
    CHECK(both.exit_code == 2);

    const Demo& d = demo();
    const CmdResult bad_tau =
        run_cmd(kCli + " clean" + small_clean_flags(d) + " --threshold 1.5 --out " +
                d.dir + "/run_bad_tau");
    CHECK(bad_tau.exit_code == 2);
    CHECK(bad_tau.output.find("outside [0, 1]") != std::string::npos);
}
