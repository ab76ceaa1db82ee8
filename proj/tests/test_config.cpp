#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rbc/config.hpp"

using rbc::AttackKind;
using rbc::KeyValueFile;
using rbc::RunConfig;

namespace {

KeyValueFile kv(const std::string& text) {
    std::istringstream in(text);
    return KeyValueFile::parse(in);
}

std::string temp_file(const std::string& name, const std::string& body) {
    const auto p = std::filesystem::temp_directory_path() / ("rbc_cfg_" + std::to_string(::getpid()) + "_" + name);
    std::ofstream(p) << body;
    return p.string();
}

}  // namespace

TEST(KeyValue, CommentsBlanksAndOverrides) {
    const auto f = kv("# header\n\n  model = uniform  \nlength=20\nlength = 30\n\t# indented comment\n");
    EXPECT_EQ(f.str("model", ""), "uniform");
    EXPECT_EQ(f.num<int>("length", 0), 30);
    EXPECT_EQ(f.values().size(), 2u);
    EXPECT_EQ(f.str("missing", "dflt"), "dflt");
    EXPECT_EQ(f.num<double>("missing", 2.5), 2.5);
}

TEST(KeyValue, ValueMayContainEquals) {
    EXPECT_EQ(kv("attacks = external:awk -v a=1 '{print}'\n").str("attacks", ""), "external:awk -v a=1 '{print}'");
}

TEST(KeyValue, Errors) {
    EXPECT_THROW(kv("no equals sign\n"), rbc::InvalidArgument);
    EXPECT_THROW(kv(" = 3\n"), rbc::InvalidArgument);
    EXPECT_THROW(kv("length = 1x\n").num<int>("length", 0), rbc::InvalidArgument);
    EXPECT_THROW(KeyValueFile::load("/nonexistent/rbc.cfg"), rbc::InvalidArgument);
}

TEST(RunConfig, Defaults) {
    const auto c = RunConfig::from(kv(""));
    EXPECT_EQ(c.model.kind, "markov");
    EXPECT_EQ(c.model.vocab_size, 64u);
    EXPECT_EQ(c.code.kind, "ldpc");
    EXPECT_EQ(c.length, 150u);
    EXPECT_EQ(c.lengths, (std::vector<std::size_t>{10, 25, 50, 75, 100, 125, 150}));
    EXPECT_EQ(c.replications, 10u);
    EXPECT_EQ(c.alpha, 0.01);
    EXPECT_EQ(c.tests.size(), 3u);
    EXPECT_TRUE(c.attacks.empty());
    EXPECT_EQ(c.stride, rbc::Stride::overlapping);
    EXPECT_FALSE(c.key.has_value());
    const auto code = rbc::build_code(c.code);
    EXPECT_EQ(code.n(), 12u);
    EXPECT_EQ(code.k(), 5u);
}

TEST(RunConfig, AllKeys) {
    const auto c = RunConfig::from(kv(R"(model = uniform
model.vocab_size = 32
model.order = 1
model.concentration = 2.0
model.seed = 9
code = one-to-one
code.k = 6
code.seed = 4
converter.seed = 3
key = 101100
length = 90
lengths = 10, 20 ,40
replications = 3
alpha = 0.05
tests = BC, pglrt
attacks = delete:0.2, swap:0.1
stride = disjoint
prompts = p.tsv
out = results
seed = 12
threads = 2
)"));
    EXPECT_EQ(c.model.kind, "uniform");
    EXPECT_EQ(c.model.vocab_size, 32u);
    EXPECT_EQ(c.model.markov.vocab_size, 32u);
    EXPECT_EQ(c.model.markov.order, 1u);
    EXPECT_EQ(c.model.markov.concentration, 2.0);
    EXPECT_EQ(c.model.markov.seed, 9u);
    EXPECT_EQ(c.code.kind, "one-to-one");
    EXPECT_EQ(c.code.k, 6u);
    EXPECT_EQ(c.converter_seed, 3u);
    EXPECT_EQ(*c.key, rbc::BitString::parse("101100"));
    EXPECT_EQ(c.length, 90u);
    EXPECT_EQ(c.lengths, (std::vector<std::size_t>{10, 20, 40}));
    EXPECT_EQ(c.replications, 3u);
    EXPECT_EQ(c.alpha, 0.05);
    EXPECT_EQ(c.tests, (std::vector<rbc::TestKind>{rbc::TestKind::bc, rbc::TestKind::pglrt}));
    ASSERT_EQ(c.attacks.size(), 2u);
    EXPECT_EQ(c.stride, rbc::Stride::disjoint);
    EXPECT_EQ(c.prompts, "p.tsv");
    EXPECT_EQ(c.out, "results");
    EXPECT_EQ(c.seed, 12u);
    EXPECT_EQ(c.threads, 2u);

    const auto w = rbc::build_watermark(c, 32, c.length);
    EXPECT_EQ(w.k(), 6u);
    EXPECT_EQ(w.key, rbc::BitString::parse("101100"));
    EXPECT_EQ(w.bits_per_token(), 5u);
}

TEST(RunConfig, KeyFromSeedWhenAbsent) {
    auto c = RunConfig::from(kv("key.seed = 7\n"));
    const auto w = rbc::build_watermark(c, 64, 150);
    EXPECT_EQ(w.key, rbc::make_key(5, 7));
    c.key = rbc::BitString::parse("111");
    EXPECT_THROW(rbc::build_watermark(c, 64, 150), rbc::InvalidArgument);  // k = 5
}

TEST(RunConfig, Rejections) {
    for (const char* text : {"model = gpt\n", "code = turbo\n", "stride = sideways\n", "alpha = 0\n", "alpha = 1.5\n",
                             "replications = 0\n", "lengths = 10,0\n", "lengths = ,\n", "tests = bogus\n",
                             "tests = \n", "attacks = drop:0.1\n", "attacks = delete:2\n", "attacks = delete\n",
                             "key = 10a1\n", "length = -3\n"})
        EXPECT_THROW(RunConfig::from(kv(text)), rbc::InvalidArgument) << text;
    EXPECT_NO_THROW(RunConfig::from(kv("alpha = 1\n")));
}

TEST(ParseAttacks, OrderAndRates) {
    const auto a = RunConfig::parse_attacks("delete:0.2,swap:0.05");
    ASSERT_EQ(a.size(), 2u);
    EXPECT_EQ(a[0].kind, AttackKind::delete_tokens);
    EXPECT_EQ(a[0].rate, 0.2);
    EXPECT_EQ(a[1].kind, AttackKind::swap_tokens);
    EXPECT_EQ(a[1].rate, 0.05);
    EXPECT_TRUE(RunConfig::parse_attacks("").empty());
    EXPECT_TRUE(RunConfig::parse_attacks("   ").empty());
}

TEST(ParseAttacks, ExternalTakesTheRestOfTheLine) {
    const auto a = RunConfig::parse_attacks("swap:0.1, external:tr ',' ' ' | cat, delete:0.3");
    ASSERT_EQ(a.size(), 2u);
    EXPECT_EQ(a[1].kind, AttackKind::external);
    EXPECT_EQ(a[1].external_command, "tr ',' ' ' | cat, delete:0.3");
    EXPECT_THROW(RunConfig::parse_attacks("external:  "), rbc::InvalidArgument);
}

TEST(BuildModel, Kinds) {
    rbc::ModelSpec s;
    s.markov.vocab_size = 16;
    EXPECT_EQ(rbc::build_model(s)->vocab_size(), 16u);
    s.kind = "uniform";
    s.vocab_size = 10;
    EXPECT_EQ(rbc::build_model(s)->vocab_size(), 10u);
    s.kind = "bridge-stdio";
    s.command = std::string(RBC_FAKE_BRIDGE) + " --vocab 5";
    EXPECT_EQ(rbc::build_model(s)->vocab_size(), 5u);
    s.kind = "nope";
    EXPECT_THROW(rbc::build_model(s), rbc::InvalidArgument);
}

TEST(LoadPrompts, BothFormats) {
    const auto path = temp_file("prompts", "# comment\n1 2 3\n\n{\"tokens\": [4, 5]}\n  7  \n");
    const auto p = rbc::load_prompts(path);
    ASSERT_EQ(p.size(), 3u);
    EXPECT_EQ(p[0], (std::vector<rbc::TokenId>{1, 2, 3}));
    EXPECT_EQ(p[1], (std::vector<rbc::TokenId>{4, 5}));
    EXPECT_EQ(p[2], (std::vector<rbc::TokenId>{7}));
    std::filesystem::remove(path);
    EXPECT_EQ(rbc::load_prompts(""), (std::vector<std::vector<rbc::TokenId>>{{}}));
}

TEST(LoadPrompts, Errors) {
    EXPECT_THROW(rbc::load_prompts("/nonexistent/prompts"), rbc::InvalidArgument);
    for (const char* body : {"# only a comment\n", "1 x 3\n", "{\"tokens\": \n"}) {
        const auto path = temp_file("bad", body);
        EXPECT_THROW(rbc::load_prompts(path), rbc::InvalidArgument) << body;
        std::filesystem::remove(path);
    }
}
