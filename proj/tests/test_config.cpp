#include "fairrobust/config.hpp"
#include "fairrobust/rng.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace fairrobust;

namespace {

std::string error_of(const std::string& text)
{
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST(Config, DefaultsRoundTrip)
{
    const RunConfig c = parse_config("");
    const auto text = format_config(c);
    EXPECT_EQ(format_config(parse_config(text)), text);
    EXPECT_EQ(c.k_grid, default_k_grid());
    EXPECT_EQ(c.repetitions, 50);
    EXPECT_EQ(c.expgrad.eta, 2.0);
    EXPECT_EQ(c.expgrad.t_max, 50);
    EXPECT_EQ(c.expgrad.eps_tol, 0.01);
    EXPECT_EQ(c.delta_floor, 1e-6);
}

TEST(Config, ParsesEverySection)
{
    const std::string text =
        "# comment\n"
        "[dataset]\nsource = synthetic\nn = 1234\nbias = 0.25\ngroup_ratio = 0.4\ntrain_fraction = 0.8\nbalance = true\n"
        "[model]\nlearners = sgd_linear, decision_tree\nsgd_epochs = 7\ntree_max_depth = 3\n"
        "[sweep]\nstrategies = f0,f3\nmetrics = dp\nk_grid = 0:2:5\nrepetitions = 9\nmaster_seed = 77\njobs = 4\n"
        "[expgrad]\neps_tol = 0.02\nt_max = 12\n"
        "[threshold]\nfit_data = noisy\n"
        "[theory]\nmonte_carlo_n = 1000\n"
        "[output]\ndir = results/x\n";
    const RunConfig c = parse_config(text);
    EXPECT_EQ(c.dataset.synth.n, 1234);
    EXPECT_EQ(c.dataset.synth.bias, 0.25);
    EXPECT_EQ(c.dataset.synth.seed, 77u);
    EXPECT_TRUE(c.dataset.balance);
    EXPECT_EQ(c.learners, (std::vector<Learner>{Learner::sgd_linear, Learner::decision_tree}));
    EXPECT_EQ(c.hyper.sgd_epochs, 7);
    EXPECT_EQ(c.hyper.tree_max_depth, 3);
    EXPECT_EQ(c.strategies, (std::vector<StrategyId>{StrategyId::f0, StrategyId::f3}));
    EXPECT_EQ(c.metrics, (std::vector<FairnessMetricId>{FairnessMetricId::dp}));
    EXPECT_EQ(c.k_grid, (std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0}));
    EXPECT_EQ(c.repetitions, 9);
    EXPECT_EQ(c.jobs, 4u);
    EXPECT_EQ(c.expgrad.eps_tol, 0.02);
    EXPECT_TRUE(c.threshold_fit_noisy);
    EXPECT_EQ(c.theory.monte_carlo_n, 1000);
    EXPECT_EQ(c.output_dir, "results/x");

    const auto canon = format_config(c);
    EXPECT_EQ(format_config(parse_config(canon)), canon);

    const auto sc = sweep_config(c);
    EXPECT_EQ(sc.k_grid, c.k_grid);
    EXPECT_EQ(sc.master_seed, 77u);
    EXPECT_EQ(sc.learners, c.learners);
    EXPECT_TRUE(sc.threshold_fit_noisy);
}

TEST(Config, RoundTripProperty)
{
    // Random configs survive format -> parse -> format unchanged.
    Rng r(3);
    for (int trial = 0; trial < 50; ++trial) {
        RunConfig c;
        c.dataset.synth.n = static_cast<Index>(100 + r.uniform_index(100000));
        c.dataset.synth.bias = r.uniform();
        c.dataset.synth.group_ratio = 0.05 + 0.9 * r.uniform();
        c.master_seed = r.next_u64();
        c.dataset.synth.seed = c.master_seed;
        c.repetitions = static_cast<Index>(1 + r.uniform_index(100));
        c.delta_floor = 1e-9 + r.uniform();
        c.k_grid = {0.0};
        for (int i = 0; i < 5; ++i) {
            c.k_grid.push_back(c.k_grid.back() + 0.01 + r.uniform());
        }
        c.hyper.logreg_learning_rate = r.uniform();
        c.expgrad.eta = 0.1 + r.uniform();
        const auto text = format_config(c);
        const auto back = parse_config(text);
        EXPECT_EQ(format_config(back), text);
        EXPECT_EQ(back.k_grid, c.k_grid);
        EXPECT_EQ(back.master_seed, c.master_seed);
        EXPECT_EQ(back.hyper.logreg_learning_rate, c.hyper.logreg_learning_rate);
    }
}

TEST(Config, HashIgnoresJobsAndOutputDir)
{
    RunConfig a = parse_config("");
    RunConfig b = a;
    b.jobs = 8;
    b.output_dir = "elsewhere";
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
    b.master_seed = 1;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, HashIsFnv1aOfCanonicalForm)
{
    // Independent FNV-1a 64 over the canonical text.
    const RunConfig c = parse_config("[sweep]\nmaster_seed = 5\n");
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : format_config(c)) {
        h = (h ^ ch) * 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    EXPECT_EQ(config_hash(c), buf);
}

TEST(Config, ErrorsNameTheField)
{
    EXPECT_NE(error_of("[sweep]\nrepetitions = -3\n").find("sweep.repetitions"), std::string::npos);
    EXPECT_NE(error_of("[sweep]\nrepetitions = 0\n").find("sweep.repetitions"), std::string::npos);
    EXPECT_NE(error_of("[sweep]\nk_grid = 1,2\n").find("sweep.k_grid"), std::string::npos);
    EXPECT_NE(error_of("[sweep]\nk_grid = 0,2,1\n").find("sweep.k_grid"), std::string::npos);
    EXPECT_NE(error_of("[sweep]\nmetrics = dp,zz\n").find("sweep.metrics"), std::string::npos);
    EXPECT_NE(error_of("[sweep]\nbogus = 1\n").find("sweep.bogus"), std::string::npos);
    EXPECT_NE(error_of("[dataset]\nsource = csv\n").find("dataset.csv"), std::string::npos);
    EXPECT_NE(error_of("[dataset]\nsource = csv\ncsv = a.csv\n").find("dataset.schema"), std::string::npos);
    EXPECT_NE(error_of("[dataset]\nbias = abc\n").find("dataset.bias"), std::string::npos);
    EXPECT_NE(error_of("[dataset]\nbalance = maybe\n").find("dataset.balance"), std::string::npos);
    EXPECT_NE(error_of("[model]\nlearners = forest\n").find("model.learners"), std::string::npos);
    EXPECT_NE(error_of("[threshold]\nfit_data = both\n").find("threshold.fit_data"), std::string::npos);
    EXPECT_NE(error_of("[sweep]\nrepetitions = 3\nrepetitions = 4\n").find("duplicate"), std::string::npos);
    EXPECT_NE(error_of("n = 3\n").find("line 1"), std::string::npos);
    EXPECT_THROW(load_config("/nonexistent/fairrobust.cfg"), ConfigError);
}

TEST(Config, MissingCsvFileNamesField)
{
    DatasetConfig d;
    d.source = DatasetSource::csv;
    d.csv = "/nonexistent/data.csv";
    d.schema = "/nonexistent/data.schema";
    try {
        load_dataset(d);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("dataset.csv"), std::string::npos);
    }
}

TEST(Config, LoadsCsvAndSyntheticDatasets)
{
    const auto dir = std::filesystem::temp_directory_path() / "fairrobust_test_config";
    std::filesystem::create_directories(dir);
    const auto synth = synth_biased(300, 1.0, 0.5, 2);
    write_csv(synth, dir / "d.csv");
    std::ofstream(dir / "d.schema") << format_schema(schema_for(synth));
    std::ofstream(dir / "run.cfg") << "[dataset]\nsource = csv\ncsv = " << (dir / "d.csv").string() << "\nschema = "
                                   << (dir / "d.schema").string() << "\n";
    const auto c = load_config(dir / "run.cfg");
    const auto ds = load_dataset(c.dataset);
    EXPECT_EQ(ds.rows(), 300);
    EXPECT_EQ(ds.labels(), synth.labels());

    DatasetConfig s;
    s.synth = {500, 1.0, 0.5, 3};
    s.balance = true;
    const auto b = load_dataset(s);
    EXPECT_EQ(b.count_label(0), b.count_label(1));
    std::filesystem::remove_all(dir);
}
