// SPDX-License-Identifier: MIT
#include "svdnf/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace svdnf;

TEST(LoadReturns, PricesBecomeLogRatios) {
    std::istringstream in("date,close\n2020-01-01,100\n2020-01-02,100\n2020-01-03,105\n");
    const ReturnSeries rs = load_returns(in, SeriesMode::Prices);
    ASSERT_EQ(rs.size(), 2u);
    EXPECT_EQ(rs.y[0], 0.0);
    EXPECT_NEAR(rs.y[1], 0.04879016416943205, 1e-16);
    EXPECT_EQ(rs.labels, (std::vector<std::string>{"2020-01-02", "2020-01-03"}));
}

TEST(LoadReturns, CommentsBlankLinesAndColumnChoice) {
    std::istringstream in("# produced by a script\n\nday,r,other\n# note\n1,0.01,9\n2,-0.02,9\n\n");
    const ReturnSeries rs = load_returns(in, SeriesMode::Returns, "r");
    EXPECT_EQ(rs.y, (std::vector<double>{0.01, -0.02}));
    EXPECT_TRUE(rs.labels.empty());
}

TEST(LoadReturns, MissingCellReportsLine) {
    std::istringstream in("date,ret\n1,0.01\n2,0.02\n3,0.0\n4,-0.01\n5,0.003\n6,\n7,0.01\n");
    try {
        (void)load_returns(in, SeriesMode::Returns);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("line 7"), std::string::npos) << e.what();
    }
}

TEST(LoadReturns, RejectsBadInput) {
    std::istringstream a("p\n100\n-1\n");
    EXPECT_THROW((void)load_returns(a, SeriesMode::Prices), DataError);
    std::istringstream b("r\nabc\n");
    EXPECT_THROW((void)load_returns(b, SeriesMode::Returns), DataError);
    std::istringstream c("r\n");
    EXPECT_THROW((void)load_returns(c, SeriesMode::Returns), DataError);
    std::istringstream d("a,b\n1\n");
    EXPECT_THROW((void)load_returns(d, SeriesMode::Returns), DataError);
    std::istringstream e("a,b\n1,2\n");
    EXPECT_THROW((void)load_returns(e, SeriesMode::Returns, "zz"), DataError);
    EXPECT_THROW((void)load_returns(std::string("/nonexistent/file.csv"), SeriesMode::Returns), DataError);
    EXPECT_THROW((void)parse_series_mode("levels"), DomainError);
}

TEST(Config, RoundTrip) {
    RunConfig c;
    c.variant = ModelVariant::SVCJSI;
    c.grid = GridSpec::for_variant(ModelVariant::SVCJSI, 30);
    c.grid.M = 7;
    c.grid.floor_eps = 3e-9;
    c.seed = 123456789012345ULL;
    c.h = 1.0 / 252.0;
    c.particles = 5000;
    c.data = "some dir/prices.csv";
    c.data_mode = "prices";
    c.column = "close";
    c.out = "results";
    c.params[static_cast<std::size_t>(Param::kappa)] = 4.316;
    c.params[static_cast<std::size_t>(Param::rho_v)] = -0.1 / 3.0;
    c.options["bench.trials"] = "25";
    const std::string text = write_config(c);
    std::istringstream in(text);
    const RunConfig back = parse_config(in);
    EXPECT_EQ(back, c);
    EXPECT_EQ(write_config(back), text);
}

TEST(Config, DefaultsAndErrors) {
    std::istringstream a("variant = svcj  # comment\ngrid.N = 40\n");
    const RunConfig c = parse_config(a);
    EXPECT_EQ(c.variant, ModelVariant::SVCJ);
    EXPECT_EQ(c.grid, GridSpec::for_variant(ModelVariant::SVCJ, 40));
    EXPECT_EQ(c.seed, 42u);
    EXPECT_EQ(c.particle_count(), 1000000u);

    std::istringstream b("variant = garch\n");
    EXPECT_THROW((void)parse_config(b), DataError);
    std::istringstream d("params.zeta = 1\n");
    EXPECT_THROW((void)parse_config(d), DataError);
    std::istringstream e("grid.N = 1\n");
    EXPECT_THROW((void)parse_config(e), DataError);
    std::istringstream f("h = 0\n");
    EXPECT_THROW((void)parse_config(f), DataError);
}

TEST(Config, ReadChecksDataFile) {
    const auto dir = std::filesystem::temp_directory_path() / "svdnf_io_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream(dir / "run.cfg") << "data = \"missing.csv\"\n";
    }
    EXPECT_THROW((void)read_config((dir / "run.cfg").string()), DataError);
    {
        std::ofstream(dir / "r.csv") << "r\n0.01\n";
        std::ofstream(dir / "run.cfg") << "data = \"r.csv\"\n";
    }
    const RunConfig c = read_config((dir / "run.cfg").string());
    EXPECT_EQ(std::filesystem::path(c.data), dir / "r.csv");
    std::filesystem::remove_all(dir);
}

TEST(Stamp, Fnv1aAndFormat) {
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
    const std::string s = stamp_line(7, "");
    EXPECT_EQ(s, "# svdnf " + std::string(kVersion) + " seed=7 config=cbf29ce484222325");
}

TEST(FormatDouble, RoundTrips) {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 1.0 / 252.0}) {
        EXPECT_EQ(std::stod(format_double(x)), x);
    }
}

TEST(Writers, SweepCsvLayout) {
    SweepReport r;
    SweepPoint p;
    p.N = 25;
    p.mape = 0.5;
    p.seconds = 0.25;
    r.points.push_back(p);
    std::ostringstream os;
    write_sweep_csv(os, r, "# stamp");
    EXPECT_EQ(os.str(), "# stamp\nN,mape,seconds\n25,0.5,0.25\n");
}
