#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string out;  // stdout and stderr
};

Outcome run(const std::string& args)
{
    const std::string cmd = std::string(RIS_SENSE_PATH) + " " + args + " 2>&1";
    Outcome r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    while (const std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::vector<std::string> lines(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string l; std::getline(ss, l);) out.push_back(l);
    return out;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() / ("ris_cli_" + std::to_string(::getpid()) + "_"
                                            + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

// relative error column of a "name truth estimate rel_error" row
double rel_error_of(const std::string& out, const std::string& name)
{
    for (const std::string& l : lines(out)) {
        std::stringstream ss(l);
        std::string n;
        double truth = 0, est = 0, rel = 0;
        if (ss >> n >> truth >> est >> rel && n == name) return rel;
    }
    return -1.0;
}

} // namespace

TEST_F(Cli, SimulateNoiseless)
{
    const Outcome r = run("simulate --snr-db 300 --seed 7");
    ASSERT_EQ(r.code, 0) << r.out;
    for (const char* p : {"tau", "nu", "mu_D", "psi_D"}) {
        const double e = rel_error_of(r.out, p);
        EXPECT_GE(e, 0.0) << p << "\n" << r.out;
        EXPECT_LT(e, 1e-6) << p;
    }
}

TEST_F(Cli, SimulateIsDeterministic)
{
    const Outcome a = run("simulate --snr-db 10 --seed 3 --max-iters 30");
    const Outcome b = run("simulate --snr-db 10 --seed 3 --max-iters 30");
    ASSERT_EQ(a.code, 0);
    auto strip_time = [](const std::string& s) {
        std::string out;
        for (const std::string& l : lines(s))
            if (l.rfind("elapsed", 0) != 0) out += l + "\n";
        return out;
    };
    EXPECT_EQ(strip_time(a.out), strip_time(b.out));
}

TEST_F(Cli, SimulateWritesJson)
{
    const Outcome r = run("simulate --snr-db 300 --seed 7 -o " + path("one.json"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(slurp(path("one.json")));
    EXPECT_FALSE(j.empty());
}

TEST_F(Cli, IdentifiabilityViolationIsUsageError)
{
    const Outcome r = run("simulate --set K=3");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("K"), std::string::npos);
}

TEST_F(Cli, UnknownKeyAndBadArgs)
{
    EXPECT_EQ(run("simulate --set nope=1").code, 2);
    EXPECT_EQ(run("simulate --snr-db abc").code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, SweepRowCountAndManifest)
{
    const std::string csv = path("q.csv");
    const Outcome r = run("sweep --var Q --values 8,16,32 --snr 0:10:30 --trials 2 --max-iters 15 -o " + csv);
    ASSERT_EQ(r.code, 0) << r.out;
    const auto rows = lines(slurp(csv));
    ASSERT_EQ(rows.size(), 1u + 48u);
    EXPECT_EQ(rows[0], "sweep_var,sweep_value,snr_db,parameter,rmse,trials_used,stage1_iters,stage2_iters");
    EXPECT_EQ(rows[1].rfind("Q,8,0,tau,", 0), 0u) << rows[1];
    const auto m = nlohmann::json::parse(slurp(path("q.manifest.json")));
    EXPECT_EQ(m["sweep_var"], "Q");
    EXPECT_EQ(m["trials"], 2);
}

TEST_F(Cli, SweepWithoutVariable)
{
    const Outcome r = run("sweep --var none --snr 5 --trials 1 --max-iters 10 -o " + path("n.csv"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto rows = lines(slurp(path("n.csv")));
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows[1].rfind("none,0,5,tau,", 0), 0u) << rows[1];
}

TEST_F(Cli, SweepByteIdenticalAcrossRunsAndJobs)
{
    const std::string args = "sweep --var K --values 16,25 --snr 0:20:20 --trials 2 --max-iters 12 --seed 4 ";
    ASSERT_EQ(run(args + "--jobs 1 -o " + path("a.csv")).code, 0);
    ASSERT_EQ(run(args + "--jobs 3 -o " + path("b.csv")).code, 0);
    ASSERT_EQ(run(args + "--jobs 1 -o " + path("c.csv")).code, 0);
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("c.csv")));
    EXPECT_EQ(slurp(path("a.manifest.json")), slurp(path("b.manifest.json")));
}

TEST_F(Cli, SweepArgumentErrors)
{
    EXPECT_EQ(run("sweep --trials 0 -o " + path("x.csv")).code, 2);
    EXPECT_EQ(run("sweep --var Q -o " + path("x.csv")).code, 2);
    EXPECT_EQ(run("sweep --var N --values 8 -o " + path("x.csv")).code, 2);
    EXPECT_EQ(run("sweep --snr 5:1:0 -o " + path("x.csv")).code, 2);
    EXPECT_FALSE(fs::exists(path("x.csv")));
}

TEST_F(Cli, UnwritableOutputIsRuntimeError)
{
    const Outcome r = run("sweep --snr 5 --trials 1 --max-iters 5 -o /nonexistent-dir/sub/out.csv");
    EXPECT_EQ(r.code, 1) << r.out;
}

TEST_F(Cli, ComplexityGrid)
{
    const Outcome r = run("complexity --grid N=4,8,16");
    ASSERT_EQ(r.code, 0) << r.out;
    const auto rows = lines(r.out);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0], "L,N,Q,M,K,iters1,iters2,stage1_ops,stage2_ops");
    double prev = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double ops = std::stod(rows[i].substr(rows[i].find_last_of(',', rows[i].find_last_of(',') - 1) + 1));
        EXPECT_GT(ops, prev) << rows[i];
        prev = ops;
    }
    EXPECT_EQ(run("complexity --grid X=1").code, 2);
}

TEST_F(Cli, Selftest)
{
    const Outcome ok = run("selftest");
    EXPECT_EQ(ok.code, 0) << ok.out;
    const Outcome bad = run("selftest --inject-fault unfold");
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.out.find("FAIL unfold"), std::string::npos) << bad.out;
    EXPECT_EQ(run("selftest --inject-fault nothing").code, 2);
}

TEST_F(Cli, ConfigFileAndOverridePrecedence)
{
    {
        std::ofstream cfg(path("s.cfg"));
        cfg << "# small scene\nQ = 6\nM = 5\n";
    }
    const Outcome a = run("simulate --snr-db 300 --max-iters 5 --config " + path("s.cfg"));
    ASSERT_EQ(a.code, 0) << a.out;
    EXPECT_NE(a.out.find("Q=6 M=5"), std::string::npos) << a.out;
    const Outcome b = run("simulate --snr-db 300 --max-iters 5 --config " + path("s.cfg") + " --set Q=7");
    ASSERT_EQ(b.code, 0) << b.out;
    EXPECT_NE(b.out.find("Q=7 M=5"), std::string::npos) << b.out;

    {
        std::ofstream cfg(path("bad.cfg"));
        cfg << "Q = 6\nbogus = 1\n";
    }
    const Outcome c = run("simulate --config " + path("bad.cfg"));
    EXPECT_EQ(c.code, 2);
    EXPECT_NE(c.out.find(":2:"), std::string::npos) << c.out;
}
