#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ris_sensing/config.hpp"
#include "ris_sensing/errors.hpp"

using namespace ris;

namespace {

std::string temp_file(const std::string& name, const std::string& body)
{
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << body;
    return path.string();
}

} // namespace

TEST(Config, ApplySetting)
{
    ScenarioConfig cfg = ScenarioConfig::desk();
    apply_setting(cfg, "K", "64");
    apply_setting(cfg, "lambda", " 0.02 ");
    apply_setting(cfg, "codebook", "dft");
    EXPECT_EQ(cfg.K, 64);
    EXPECT_DOUBLE_EQ(cfg.lambda, 0.02);
    EXPECT_EQ(cfg.codebook, CodebookKind::Dft);

    apply_setting(cfg, "delta_f", "60000");
    EXPECT_DOUBLE_EQ(cfg.T_s, 1.0 / 60000.0);
}

TEST(Config, RejectsUnknownKeysAndBadValues)
{
    ScenarioConfig cfg;
    EXPECT_THROW(apply_setting(cfg, "KK", "1"), UsageError);
    EXPECT_THROW(apply_setting(cfg, "K", "1.5"), UsageError);
    EXPECT_THROW(apply_setting(cfg, "d1", "ten"), UsageError);
    EXPECT_THROW(apply_setting(cfg, "codebook", "hadamard"), UsageError);
    EXPECT_THROW(parse_assignment("K"), UsageError);
    EXPECT_THROW(parse_assignment("=3"), UsageError);
    EXPECT_EQ(parse_assignment(" Q = 32 "), (std::pair<std::string, std::string>{"Q", "32"}));
}

TEST(Config, LoadsFileWithComments)
{
    const std::string path = temp_file("ris_cfg_ok.txt", "# scenario\nQ = 32\n\nd2=7.5   # metres\n");
    ScenarioConfig cfg = ScenarioConfig::desk();
    load_config_file(cfg, path);
    EXPECT_EQ(cfg.Q, 32);
    EXPECT_DOUBLE_EQ(cfg.d2, 7.5);
    EXPECT_EQ(cfg.M, ScenarioConfig::desk().M);
}

TEST(Config, FileErrorsNameTheLine)
{
    const std::string path = temp_file("ris_cfg_bad.txt", "Q = 8\nbogus = 1\n");
    ScenarioConfig cfg;
    try {
        load_config_file(cfg, path);
        FAIL() << "expected UsageError";
    } catch (const UsageError& e) {
        EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
    }
    EXPECT_THROW(load_config_file(cfg, "/nonexistent/ris.cfg"), UsageError);
}

TEST(Config, EntriesRoundTrip)
{
    ScenarioConfig cfg = ScenarioConfig::table1();
    cfg.d1 = 12.345678901234567;
    cfg.codebook = CodebookKind::Dft;
    ScenarioConfig back = ScenarioConfig::desk();
    for (const auto& [k, v] : config_entries(cfg)) apply_setting(back, k, v);
    EXPECT_EQ(config_entries(back), config_entries(cfg));
    EXPECT_EQ(back.d1, cfg.d1);
    EXPECT_EQ(back.T_s, cfg.T_s);
    EXPECT_EQ(config_keys().size(), config_entries(cfg).size());
}
