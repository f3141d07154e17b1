#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

namespace {

std::string data_path(const char* name) {
    return std::string(GRIDADMM_DATA_DIR) + "/" + name;
}

std::string temp_dir() {
    char name[] = "/tmp/gridadmm_cli_XXXXXX";
    REQUIRE(mkdtemp(name) != nullptr);
    return name;
}

// Runs the CLI, returning its exit code; stdout/stderr go to a capture file.
int run_cli(const std::string& args, std::string* output = nullptr) {
    const std::string capture = temp_dir() + "/out.txt";
    const std::string cmd = std::string(GRIDADMM_CLI_PATH) + " " + args +
                            " >" + capture + " 2>&1";
    const int raw = std::system(cmd.c_str());
    if (output) {
        std::ifstream in(capture);
        std::ostringstream ss;
        ss << in.rdbuf();
        *output = ss.str();
    }
    std::remove(capture.c_str());
    REQUIRE(raw != -1);
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

bool file_exists(const std::string& path) {
    struct stat st{};
    return stat(path.c_str(), &st) == 0 && st.st_size > 0;
}

}  // namespace

TEST_CASE("solve: converges and writes both artifacts") {
    const std::string dir = temp_dir();
    std::string out;
    const int rc = run_cli("solve --case " + data_path("case9.m") +
                               " --preset case9 --eps 1e-4 --out-dir " + dir,
                           &out);
    CHECK(rc == 0);
    CHECK(out.find("status=converged") != std::string::npos);
    CHECK(file_exists(dir + "/solution.json"));
    CHECK(file_exists(dir + "/convergence.csv"));

    std::ifstream csv(dir + "/convergence.csv");
    std::string header;
    REQUIRE(std::getline(csv, header));
    CHECK(header == "outer,inner,primal_res,dual_res,z_norm,elapsed_s");
}

TEST_CASE("solve: iteration limit exits 2 but still writes artifacts") {
    const std::string dir = temp_dir();
    std::string out;
    const int rc = run_cli("solve --case " + data_path("case9.m") +
                               " --preset case9 --max-outer 1 --max-inner 2" +
                               " --out-dir " + dir,
                           &out);
    CHECK(rc == 2);
    CHECK(out.find("status=not_converged") != std::string::npos);
    CHECK(file_exists(dir + "/solution.json"));
    CHECK(file_exists(dir + "/convergence.csv"));
}

TEST_CASE("solve: input errors exit 1 and name the problem") {
    std::string out;
    CHECK(run_cli("solve --case /no/such/case.m", &out) == 1);
    CHECK(out.find("/no/such/case.m") != std::string::npos);

    CHECK(run_cli("solve", &out) == 1);  // --case is required

    CHECK(run_cli("solve --case " + data_path("case9.m") +
                      " --preset case_bogus",
                  &out) == 1);
    CHECK(out.find("case_bogus") != std::string::npos);
}

TEST_CASE("track: runs a profile and writes periods.csv") {
    const std::string dir = temp_dir();
    const std::string profile = dir + "/profile.csv";
    std::ofstream(profile) << "period,multiplier\n1,1.0\n2,1.005\n";

    std::string out;
    const int rc = run_cli("track --case " + data_path("case9.m") +
                               " --preset case9 --eps 1e-4 --profile " +
                               profile + " --out-dir " + dir,
                           &out);
    CHECK(rc == 0);
    CHECK(out.find("periods=2") != std::string::npos);
    CHECK(file_exists(dir + "/periods.csv"));
    CHECK(file_exists(dir + "/solution.json"));
    CHECK(file_exists(dir + "/convergence.csv"));

    std::ifstream csv(dir + "/periods.csv");
    std::string header;
    REQUIRE(std::getline(csv, header));
    CHECK(header == "period,inner_iters,time_s,viol_inf,gap");
    int rows = 0;
    std::string line;
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
}

TEST_CASE("track: missing --profile is a usage error") {
    std::string out;
    CHECK(run_cli("track --case " + data_path("case9.m"), &out) == 1);
    CHECK(out.find("--profile") != std::string::npos);
}

TEST_CASE("track: malformed profile exits 1") {
    const std::string dir = temp_dir();
    const std::string profile = dir + "/profile.csv";
    std::ofstream(profile) << "time,mult\n1,1.0\n";
    std::string out;
    CHECK(run_cli("track --case " + data_path("case9.m") + " --profile " +
                      profile,
                  &out) == 1);
}
