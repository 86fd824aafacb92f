#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "chainbench/composer.hpp"
#include "chainbench/templates.hpp"
#include "support/chain_fixture.hpp"
#include "support/test_support.hpp"

using namespace chainbench;

namespace {

SeedProblem synth_seed(const std::string& id, Rng& rng) {
    long long a = static_cast<long long>(rng.below(2000)) - 400;
    long long b = static_cast<long long>(rng.below(500)) + 1;
    long long c = static_cast<long long>(rng.below(99)) + 1;
    SeedProblem s;
    s.id = id;
    s.question = "Take " + std::to_string(a) + " tokens, split them into " +
                 std::to_string(b) + " heaps, then remove " + std::to_string(c) +
                 " from each heap. How many remain?";
    s.answer = static_cast<long long>(rng.below(4000)) - 500;
    s.integers = extract_integers(s.question);
    s.key_variables = s.integers;
    s.source = "synthetic";
    return s;
}

std::vector<SeedProblem> synth_pool(std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<SeedProblem> pool;
    char buf[16];
    for (std::size_t i = 0; i < count; ++i) {
        std::snprintf(buf, sizeof(buf), "s%06zu", i);
        pool.push_back(synth_seed(buf, rng));
    }
    return pool;
}

std::vector<const SeedProblem*> refs(const std::vector<SeedProblem>& seeds) {
    std::vector<const SeedProblem*> out;
    for (const auto& s : seeds) out.push_back(&s);
    return out;
}

// Round-trip oracle: walk the gold chain through the offsets, substitute each
// placeholder back, and demand the original question bytes.
void check_roundtrip(const ComposedProblem& cp,
                     const std::map<std::string, const SeedProblem*>& by_id) {
    auto gold = cp.gold_integers();
    for (const DependencySpec& d : cp.dependencies) {
        const std::size_t i = static_cast<std::size_t>(d.chain_index) - 1;
        const SubProblem& sp = cp.sub_problems[i];
        const SeedProblem& seed = *by_id.at(sp.seed_id);
        const long long recovered = gold[i - 1] + d.offset;
        REQUIRE(recovered == d.key_value);
        const std::string original_surface =
            seed.question.substr(d.sub_start, d.sub_end - d.sub_start);
        std::string restored = sp.modified_question;
        std::size_t at = restored.find(d.placeholder);
        REQUIRE(at != std::string::npos);
        restored.replace(at, d.placeholder.size(), original_surface);
        REQUIRE(restored == seed.question);
    }
    // The head sub-problem is verbatim.
    REQUIRE(cp.sub_problems[0].modified_question ==
            by_id.at(cp.sub_problems[0].seed_id)->question);
}

std::string strip_decoration(const std::string& s) {
    std::string out;
    bool in_space = false;
    for (char c : s) {
        if (c == '#' || c == '*') continue;
        if (is_space(c)) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out += ' ';
        in_space = false;
        out += c;
    }
    return out;
}

}  // namespace

TEST_CASE("curated chain reproduces the reference offsets") {
    auto seeds = testsupport::chain4_seeds();
    Rng rng(1);
    ComposedProblem cp = build_chain(refs(seeds), rng, "fig8", 1);
    REQUIRE(cp.dependencies.size() == 3);
    CHECK(cp.dependencies[0].offset == -805);
    CHECK(cp.dependencies[1].offset == -150);
    CHECK(cp.dependencies[2].offset == -720);
    CHECK(render_constraint_expr(cp.dependencies[0]) == "[variable2] = [answer1] - 805");
    CHECK(render_constraint_expr(cp.dependencies[1]) == "[variable3] = [answer2] - 150");
    CHECK(render_constraint_expr(cp.dependencies[2]) == "[variable4] = [answer3] - 720");
    CHECK(cp.gold_integers() == std::vector<long long>{809, 204, 721, 321});
    CHECK(cp.sub_problems[1].modified_question.find("takes her [variable2] hours") !=
          std::string::npos);

    SECTION("rendered prompt matches the fixture modulo whitespace") {
        const std::string prompt = render_prompt(cp, "math");
        const std::string expected =
            read_file(testsupport::fixture_path("chain4_prompt.txt"));
        CHECK(strip_decoration(prompt) == strip_decoration(expected));
    }
}

TEST_CASE("constraint rendering") {
    DependencySpec d;
    d.chain_index = 3;
    d.placeholder = placeholder_name(3);
    SECTION("negative offset") {
        d.offset = -150;
        CHECK(render_constraint_expr(d) == "[variable3] = [answer2] - 150");
    }
    SECTION("positive offset") {
        d.offset = 42;
        CHECK(render_constraint_expr(d) == "[variable3] = [answer2] + 42");
    }
    SECTION("zero offset renders + 0") {
        d.offset = 0;
        CHECK(render_constraint_expr(d) == "[variable3] = [answer2] + 0");
    }
    SECTION("sentence form") {
        d.offset = -805;
        d.chain_index = 2;
        d.placeholder = placeholder_name(2);
        CHECK(render_constraint_sentence(d) ==
              "Using the result [answer1] from the previous calculation, "
              "[variable2] = [answer1] - 805.");
    }
}

TEST_CASE("n = 1 composition is the identity") {
    auto pool = synth_pool(1, 5);
    Rng rng(9);
    ComposedProblem cp = build_chain(refs(pool), rng, "single", 9);
    CHECK(cp.sub_problems.size() == 1);
    CHECK(cp.dependencies.empty());
    CHECK(cp.sub_problems[0].modified_question == pool[0].question);
    CHECK(cp.sub_problems[0].gold_answer == std::to_string(pool[0].answer));
}

TEST_CASE("round-trip solvability over random chains") {
    auto pool = synth_pool(256, 20240818);
    std::map<std::string, const SeedProblem*> by_id;
    for (const auto& s : pool) by_id[s.id] = &s;
    for (int n : {1, 2, 4, 8, 16}) {
        CompositionConfig cfg;
        cfg.lengths = {n};
        cfg.rng_seed = 77;
        auto composed = sample_compositions(pool, cfg);
        CHECK(composed.size() == pool.size() / static_cast<std::size_t>(n));
        for (const auto& cp : composed) {
            REQUIRE(cp.sub_problems.size() == static_cast<std::size_t>(n));
            REQUIRE(cp.dependencies.size() == static_cast<std::size_t>(n) - 1);
            check_roundtrip(cp, by_id);
        }
    }
}

TEST_CASE("placeholders are unique and reference earlier answers only") {
    auto pool = synth_pool(64, 4);
    CompositionConfig cfg;
    cfg.lengths = {8};
    cfg.rng_seed = 123;
    for (const auto& cp : sample_compositions(pool, cfg)) {
        std::string all_text;
        for (const auto& sp : cp.sub_problems) all_text += sp.modified_question;
        for (const auto& d : cp.dependencies) {
            std::size_t first = all_text.find(d.placeholder);
            REQUIRE(first != std::string::npos);
            CHECK(all_text.find(d.placeholder, first + 1) == std::string::npos);
            CHECK(d.chain_index >= 2);  // consumers sit after their producer
        }
    }
}

TEST_CASE("composition is deterministic for fixed seed and pool") {
    auto pool = synth_pool(60, 11);
    CompositionConfig cfg;
    cfg.lengths = {3};
    cfg.rng_seed = 42;
    auto serialize = [&] {
        std::string bytes;
        for (const auto& cp : sample_compositions(pool, cfg))
            bytes += composed_to_json(cp).dump() + "\n";
        return bytes;
    };
    const std::string first = serialize();
    CHECK(first == serialize());
    cfg.rng_seed = 43;
    CHECK(first != serialize());
}

TEST_CASE("expected accuracy") {
    CHECK(expected_accuracy({1.0, 1.0, 1.0}) == 1.0);
    CHECK(expected_accuracy({0.5, 0.5}) == 0.25);
    CHECK(expected_accuracy({}) == 1.0);

    SECTION("permutation invariance and monotonicity") {
        Rng rng(3);
        for (int iter = 0; iter < 200; ++iter) {
            std::vector<double> rates;
            std::size_t n = 1 + rng.index(6);
            for (std::size_t i = 0; i < n; ++i)
                rates.push_back(static_cast<double>(rng.below(1000)) / 1000.0);
            double base = expected_accuracy(rates);
            std::vector<double> shuffled = rates;
            rng.shuffle(shuffled);
            CHECK(expected_accuracy(shuffled) == Catch::Approx(base).epsilon(1e-12));
            rates.push_back(0.7);
            CHECK(expected_accuracy(rates) <= base + 1e-12);
        }
    }
    SECTION("missing rate raises") {
        SeedProblem s;
        s.id = "x";
        s.pass_rates = {{"other-model", 0.5}};
        CHECK_THROWS_AS(pass_rate_for(s, "wanted-model"), MissingPassRate);
    }
}

TEST_CASE("sample_compositions contracts") {
    SECTION("threshold 0 disables rejection") {
        auto pool = synth_pool(103, 8);
        CompositionConfig cfg;
        cfg.lengths = {4};
        cfg.rng_seed = 5;
        auto composed = sample_compositions(pool, cfg);
        CHECK(composed.size() == 25);  // floor(103 / 4)
        std::set<std::string> used;
        for (const auto& cp : composed)
            for (const auto& sp : cp.sub_problems)
                CHECK(used.insert(sp.seed_id).second);  // no seed reuse
    }
    SECTION("insufficient pool") {
        auto pool = synth_pool(3, 8);
        CompositionConfig cfg;
        cfg.lengths = {4};
        CHECK_THROWS_AS(sample_compositions(pool, cfg), InsufficientPool);
    }
    SECTION("threshold keeps only chains above it") {
        auto pool = synth_pool(40, 2);
        Rng rng(64);
        for (auto& s : pool)
            s.pass_rates["m"] = 0.3 + static_cast<double>(rng.below(700)) / 1000.0;
        CompositionConfig cfg;
        cfg.lengths = {2};
        cfg.rng_seed = 21;
        cfg.expected_accuracy_threshold = 0.25;
        cfg.rate_model = "m";
        auto composed = sample_compositions(pool, cfg);
        CHECK(!composed.empty());
        for (const auto& cp : composed) {
            REQUIRE(cp.expected_accuracy.has_value());
            CHECK(*cp.expected_accuracy > 0.25);
        }
    }
    SECTION("unsatisfiable threshold raises after bounded attempts") {
        auto pool = synth_pool(10, 2);
        for (auto& s : pool) s.pass_rates["m"] = 0.1;
        CompositionConfig cfg;
        cfg.lengths = {2};
        cfg.expected_accuracy_threshold = 0.5;
        cfg.rate_model = "m";
        CHECK_THROWS_AS(sample_compositions(pool, cfg), ThresholdUnsatisfiable);
    }
    SECTION("threshold without rates raises MissingPassRate") {
        auto pool = synth_pool(10, 2);
        CompositionConfig cfg;
        cfg.lengths = {2};
        cfg.expected_accuracy_threshold = 0.25;
        cfg.rate_model = "m";
        CHECK_THROWS_AS(sample_compositions(pool, cfg), MissingPassRate);
    }
    SECTION("mixed lengths cycle and rows carry their n") {
        auto pool = synth_pool(40, 31);
        CompositionConfig cfg;
        cfg.lengths = {1, 2, 3, 4};
        cfg.rng_seed = 3;
        auto composed = sample_compositions(pool, cfg);
        REQUIRE(composed.size() >= 4);
        CHECK(composed[0].size() == 1);
        CHECK(composed[1].size() == 2);
        CHECK(composed[2].size() == 3);
        CHECK(composed[3].size() == 4);
    }
    SECTION("difficulty ordering sorts chain members by pass rate") {
        auto pool = synth_pool(4, 12);
        pool[0].pass_rates["m"] = 0.9;
        pool[1].pass_rates["m"] = 0.2;
        pool[2].pass_rates["m"] = 0.6;
        pool[3].pass_rates["m"] = 0.4;
        CompositionConfig cfg;
        cfg.lengths = {4};
        cfg.rate_model = "m";
        cfg.preserve_order = true;
        cfg.ordering = CompositionConfig::Ordering::kEasyToHard;
        auto composed = sample_compositions(pool, cfg);
        REQUIRE(composed.size() == 1);
        std::vector<double> rates;
        for (const auto& sp : composed[0].sub_problems) {
            for (const auto& s : pool)
                if (s.id == sp.seed_id) rates.push_back(s.pass_rates.at("m"));
        }
        CHECK(std::is_sorted(rates.rbegin(), rates.rend()));
        cfg.ordering = CompositionConfig::Ordering::kHardToEasy;
        composed = sample_compositions(pool, cfg);
        rates.clear();
        for (const auto& sp : composed[0].sub_problems)
            for (const auto& s : pool)
                if (s.id == sp.seed_id) rates.push_back(s.pass_rates.at("m"));
        CHECK(std::is_sorted(rates.begin(), rates.end()));
    }
    SECTION("training-pool miniature: mixed n with rate thresholding") {
        auto pool = synth_pool(180, 77);
        Rng rng(5);
        for (auto& s : pool)
            s.pass_rates["m"] = 0.4 + static_cast<double>(rng.below(600)) / 1000.0;
        CompositionConfig cfg;
        cfg.lengths = {1, 2, 3, 4};
        cfg.rng_seed = 7;
        cfg.expected_accuracy_threshold = 0.25;
        cfg.rate_model = "m";
        auto composed = sample_compositions(pool, cfg);
        CHECK(composed.size() > 20);
        for (const auto& cp : composed) {
            Json row = composed_to_json(cp);  // schema regression
            CHECK(row.contains("id"));
            CHECK(row.contains("mode"));
            CHECK(row.contains("sub_problems"));
            CHECK(row.contains("dependencies"));
            CHECK(row.contains("expected_accuracy"));
            CHECK(*cp.expected_accuracy > 0.25);
            ComposedProblem back = composed_from_json(row);
            CHECK(back.id == cp.id);
            CHECK(back.sub_problems.size() == cp.sub_problems.size());
        }
    }
}

TEST_CASE("direct mode concatenates untouched") {
    auto pool = synth_pool(6, 15);
    auto direct = compose_direct(refs(pool), "d", 0);
    CHECK(direct.mode == ComposeMode::kDirect);
    CHECK(direct.dependencies.empty());
    for (std::size_t i = 0; i < pool.size(); ++i)
        CHECK(direct.sub_problems[i].modified_question == pool[i].question);

    SECTION("same seeds in both modes keep the ordering") {
        Rng rng(8);
        auto seq = build_chain(refs(pool), rng, "s", 8);
        REQUIRE(seq.sub_problems.size() == direct.sub_problems.size());
        for (std::size_t i = 0; i < pool.size(); ++i)
            CHECK(seq.sub_problems[i].seed_id == direct.sub_problems[i].seed_id);
    }
    SECTION("single problem is its own statement") {
        auto one = compose_direct({&pool[0]}, "one", 0);
        CHECK(one.sub_problems.size() == 1);
        CHECK(one.sub_problems[0].modified_question == pool[0].question);
    }
}

TEST_CASE("placeholder collision is rejected") {
    auto pool = synth_pool(2, 3);
    pool[1].question += " (hint: [variable2] is not a hint)";
    pool[1].integers = extract_integers(pool[1].question);
    pool[1].key_variables = pool[1].integers;
    Rng rng(1);
    CHECK_THROWS_AS(build_chain(refs(pool), rng, "bad", 1), CompositionError);
}

TEST_CASE("prompt templates") {
    auto pool = synth_pool(3, 44);
    Rng rng(2);
    ComposedProblem cp = build_chain(refs(pool), rng, "t", 2);

    SECTION("math template keeps note and format blocks") {
        std::string prompt = render_prompt(cp, "math");
        CHECK(prompt.find("Note: In this problem set:") != std::string::npos);
        CHECK(prompt.find("- [variablek] represents the calculated variable needed to "
                          "solve problem k.") != std::string::npos);
        CHECK(prompt.find("### Final Answers") != std::string::npos);
        CHECK(prompt.find("Problem 1: \\boxed{[answer1]}") != std::string::npos);
        CHECK(prompt.find("Problem 3: \\boxed{[answer3]}") != std::string::npos);
        CHECK(prompt.find("Problem 2: Using the result [answer1] from the previous "
                          "calculation, [variable2] = [answer1] ") != std::string::npos);
    }
    SECTION("n = 1 math prompt collapses to a single boxed line") {
        auto single = compose_direct({&pool[0]}, "one", 0);
        std::string prompt = render_prompt(single, "math");
        CHECK(prompt.find("Problem 1: \\boxed{[answer1]}") != std::string::npos);
        CHECK(prompt.find("[answer2]") == std::string::npos);
    }
    SECTION("code template ends with the backtick note") {
        auto direct = compose_direct(refs(pool), "d", 0);
        std::string prompt = render_prompt(direct, "code");
        const std::string tail = "### Answer: (use the provided format with backticks)";
        REQUIRE(prompt.size() > tail.size());
        CHECK(trim(prompt).rfind(tail) == trim(prompt).size() - tail.size());
        CHECK(prompt.find("```python") != std::string::npos);
        CHECK(prompt.find("Problem 1:") == std::string::npos);  // plain concatenation
    }
    SECTION("unknown template raises") {
        CHECK_THROWS_AS(render_prompt(cp, "nope"), UnknownTemplate);
    }
}
