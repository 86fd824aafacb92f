#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "chainbench/seed_filter.hpp"
#include "support/test_support.hpp"

using namespace chainbench;

namespace {

// Reference scanner used as the extraction oracle. Built as mark-and-sweep
// (first pass blacklists decimal digit runs, second pass collects) so its
// failure modes differ from the single-pass production scanner.
struct RefOcc {
    long long value;
    std::size_t start, end;
    bool operator==(const RefOcc& o) const {
        return value == o.value && start == o.start && end == o.end;
    }
};

std::vector<RefOcc> reference_extract(const std::string& t) {
    const std::size_t n = t.size();
    auto digit = [&](std::size_t p) { return p < n && t[p] >= '0' && t[p] <= '9'; };
    std::vector<bool> dead(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (t[i] != '.' || i == 0 || !digit(i - 1) || !digit(i + 1)) continue;
        for (std::size_t p = i; p-- > 0 && digit(p);) dead[p] = true;
        for (std::size_t p = i + 1; digit(p); ++p) dead[p] = true;
    }
    std::vector<RefOcc> out;
    std::size_t i = 0;
    while (i < n) {
        if (!digit(i)) { ++i; continue; }
        std::size_t s = i, e = i;
        while (digit(e)) ++e;
        if (e - s <= 3) {
            while (e + 3 < n && t[e] == ',' && digit(e + 1) && digit(e + 2) &&
                   digit(e + 3) && !digit(e + 4))
                e += 4;
        }
        bool any_dead = false;
        for (std::size_t p = s; p < e; ++p)
            if (t[p] != ',' && dead[p]) any_dead = true;
        if (!any_dead) {
            bool minus = s > 0 && t[s - 1] == '-' && (s < 2 || !digit(s - 2));
            std::string num;
            if (minus) num += '-';
            for (std::size_t p = s; p < e; ++p)
                if (t[p] != ',') num += t[p];
            if (auto value = chainbench::parse_int(num))  // oversize runs drop
                out.push_back({*value, minus ? s - 1 : s, e});
        }
        i = e;
    }
    return out;
}

std::vector<long long> values_of(const std::vector<IntegerOccurrence>& occ) {
    std::vector<long long> v;
    for (const auto& m : occ) v.push_back(m.value);
    return v;
}

// Random prose with embedded numbers of every flavor the rule distinguishes.
std::string random_text(Rng& rng) {
    static const std::vector<std::string> pieces = {
        "walk",   "takes",  "2",      "24",    "3.5",  "-7",   "1,234", "12,345,678",
        "1,23",   "0.25",   "x=",     "-",     ".",    ", ",   " ",     "tokens",
        "$4$",    "2024",   "a-5",    "7.",    ".9",   "n",    "(",     ")",
        "9-km",   "+3",     "e.g.",   "v1.2.3"};
    std::string out;
    std::size_t parts = 1 + rng.index(20);
    for (std::size_t i = 0; i < parts; ++i) out += pieces[rng.index(pieces.size())];
    return out;
}

struct SpanApprovingVerifier final : KeyVariableVerifier {
    std::set<std::size_t> approved_starts;
    int calls = 0;
    bool unsolvable_without(const std::string&, const IntegerOccurrence& m) override {
        ++calls;
        return approved_starts.count(m.start) > 0;
    }
    std::string name() const override { return "span-approving"; }
};

struct BombVerifier final : KeyVariableVerifier {
    bool unsolvable_without(const std::string&, const IntegerOccurrence&) override {
        throw std::logic_error("verifier must not be called when the cache is warm");
    }
    std::string name() const override { return "bomb"; }
};

RawProblem raw(const std::string& id, const std::string& q, const std::string& a) {
    return RawProblem{id, q, a, "unit", {}};
}

}  // namespace

TEST_CASE("extract_integers matches the documented rule") {
    SECTION("math text with delimiters") {
        auto occ = extract_integers(
            "A stack of $n$ tokens lies before them. On each turn, the player removes "
            "either $1$ token or $4$ tokens. Find the number of positive integers $n$ "
            "less than or equal to $2024$.");
        CHECK(values_of(occ) == std::vector<long long>{1, 4, 2024});
    }
    SECTION("empty input") {
        CHECK(extract_integers("").empty());
    }
    SECTION("decimal parts are excluded") {
        // Oracle-confirmed: 3 and 5 are halves of the decimal 3.5.
        const std::string text =
            "a 9-kilometer walk takes 2 hours and 24 minutes at speed 3.5";
        auto occ = extract_integers(text);
        CHECK(values_of(occ) == std::vector<long long>{9, 2, 24});
        auto ref = reference_extract(text);
        REQUIRE(ref.size() == occ.size());
        for (std::size_t i = 0; i < ref.size(); ++i) {
            CHECK(ref[i].value == occ[i].value);
            CHECK(ref[i].start == occ[i].start);
            CHECK(ref[i].end == occ[i].end);
        }
    }
    SECTION("thousands separators") {
        auto occ = extract_integers("n <= 2,024");
        REQUIRE(occ.size() == 1);
        CHECK(occ[0].value == 2024);
        CHECK(occ[0].end - occ[0].start == 5);
        CHECK(values_of(extract_integers("1,23")) == std::vector<long long>{1, 23});
        CHECK(values_of(extract_integers("1,234,567")) ==
              std::vector<long long>{1234567});
        CHECK(values_of(extract_integers("1234,567")) ==
              std::vector<long long>{1234, 567});
        CHECK(values_of(extract_integers("1,2345")) ==
              std::vector<long long>{1, 2345});
    }
    SECTION("unary versus binary minus") {
        CHECK(values_of(extract_integers("a -5 degree day")) ==
              std::vector<long long>{-5});
        CHECK(values_of(extract_integers("3-5")) == std::vector<long long>{3, 5});
        CHECK(values_of(extract_integers("x = -4")) == std::vector<long long>{-4});
    }
    SECTION("sentence-final periods are not decimals") {
        CHECK(values_of(extract_integers("It takes 24 minutes.")) ==
              std::vector<long long>{24});
        CHECK(extract_integers("version 1.2.3").empty());
    }
}

TEST_CASE("extraction spans round-trip and agree with the reference scanner") {
    Rng rng(20240817);
    for (int iter = 0; iter < 500; ++iter) {
        const std::string text = random_text(rng);
        INFO("text: " << text);
        auto occ = extract_integers(text);
        // Round-trip: the span slice parses back to the value.
        for (const auto& m : occ) {
            auto parsed = parse_spanned_integer(text, m.start, m.end);
            REQUIRE(parsed.has_value());
            CHECK(*parsed == m.value);
        }
        // Spans are sorted and non-overlapping.
        for (std::size_t i = 1; i < occ.size(); ++i)
            CHECK(occ[i - 1].end <= occ[i].start);
        // Cross-check against the independently written scanner.
        auto ref = reference_extract(text);
        REQUIRE(ref.size() == occ.size());
        for (std::size_t i = 0; i < ref.size(); ++i) {
            CHECK(ref[i].value == occ[i].value);
            CHECK(ref[i].start == occ[i].start);
            CHECK(ref[i].end == occ[i].end);
        }
    }
}

TEST_CASE("answer normalization") {
    CHECK(parse_integer_answer("809") == 809);
    CHECK(parse_integer_answer("  +809 ") == 809);
    CHECK(parse_integer_answer("\\boxed{809}") == 809);
    CHECK(parse_integer_answer("$\\boxed{-12}$") == -12);
    CHECK(parse_integer_answer("\\boxed{\\boxed{7}}") == 7);
    CHECK(parse_integer_answer("2,024") == 2024);
    CHECK(parse_integer_answer("0809") == 809);
    CHECK_FALSE(parse_integer_answer("sqrt(2)").has_value());
    CHECK_FALSE(parse_integer_answer("\\frac{1}{2}").has_value());
    CHECK_FALSE(parse_integer_answer("").has_value());

    SECTION("idempotence") {
        Rng rng(7);
        std::vector<std::string> cases = {"809", " $\\boxed{+2,024}$ ", "x+1",
                                          "\\boxed{\\frac{657}{64}}", "$$", "-0"};
        for (int i = 0; i < 200; ++i) cases.push_back(random_text(rng));
        for (const auto& s : cases) {
            std::string once = normalize_answer(s);
            CHECK(normalize_answer(once) == once);
        }
    }
}

TEST_CASE("filter_seeds applies the contract") {
    VerdictCache cache;  // in-memory

    SECTION("key variables are the approved subset") {
        const std::string q = "take 3 apples, 5 pears and 7 plums";
        auto occ = extract_integers(q);
        REQUIRE(occ.size() == 3);
        SpanApprovingVerifier verifier;
        verifier.approved_starts = {occ[0].start, occ[2].start};
        auto result = filter_seeds({raw("a", q, "809")}, verifier, cache);
        REQUIRE(result.seeds.size() == 1);
        CHECK(result.seeds[0].key_variables.size() == 2);
        CHECK(result.seeds[0].answer == 809);
    }
    SECTION("non-integer answers are excluded") {
        AcceptAllVerifier verifier;
        auto result = filter_seeds({raw("a", "pick 3 of them", "sqrt(2)")},
                                   verifier, cache);
        CHECK(result.seeds.empty());
        CHECK(result.stats.integer_answer == 0);
    }
    SECTION("questions without integers are excluded") {
        AcceptAllVerifier verifier;
        auto result = filter_seeds({raw("a", "how many primes are even?", "1")},
                                   verifier, cache);
        CHECK(result.seeds.empty());
    }
    SECTION("malformed rows are counted and skipped") {
        AcceptAllVerifier verifier;
        auto rows = std::vector<RawProblem>{raw("a", "pick 3", "3"), raw("", "pick 4", "4"),
                                            raw("a", "pick 5", "5")};  // dup id
        auto result = filter_seeds(rows, verifier, cache);
        CHECK(result.seeds.size() == 1);
        CHECK(result.stats.malformed == 2);
    }
    SECTION("no seed ever has empty key variables") {
        SpanApprovingVerifier verifier;  // approves nothing
        auto result = filter_seeds({raw("a", "pick 3 of them", "3")}, verifier, cache);
        CHECK(result.seeds.empty());
        CHECK(result.stats.integer_answer == 1);
        CHECK(result.stats.key_verified == 0);
    }
    SECTION("output is sorted by id regardless of input order") {
        AcceptAllVerifier verifier;
        auto rows = std::vector<RawProblem>{raw("z", "pick 1", "1"), raw("a", "pick 2", "2"),
                                            raw("m", "pick 3", "3")};
        auto result = filter_seeds(rows, verifier, cache);
        REQUIRE(result.seeds.size() == 3);
        CHECK(result.seeds[0].id == "a");
        CHECK(result.seeds[2].id == "z");
    }
}

TEST_CASE("filter_seeds is idempotent over its own output") {
    AcceptAllVerifier verifier;
    VerdictCache cache;
    std::vector<RawProblem> rows;
    Rng rng(99);
    for (int i = 0; i < 50; ++i) {
        std::string q = random_text(rng);
        rows.push_back(raw("id" + std::to_string(i), q.empty() ? "3 tokens" : q,
                           i % 3 == 0 ? "abc" : std::to_string(i)));
    }
    auto first = filter_seeds(rows, verifier, cache);
    std::vector<RawProblem> refiltered;
    for (const SeedProblem& s : first.seeds)
        refiltered.push_back(raw(s.id, s.question, std::to_string(s.answer)));
    auto second = filter_seeds(refiltered, verifier, cache);
    REQUIRE(second.seeds.size() == first.seeds.size());
    for (std::size_t i = 0; i < first.seeds.size(); ++i) {
        CHECK(second.seeds[i].id == first.seeds[i].id);
        CHECK(second.seeds[i].question == first.seeds[i].question);
        CHECK(second.seeds[i].answer == first.seeds[i].answer);
        CHECK(second.seeds[i].integers.size() == first.seeds[i].integers.size());
    }
}

TEST_CASE("verdict cache short-circuits the verifier and pins reruns") {
    testsupport::TempDir tmp;
    const std::string cache_path = tmp.file("verdicts.jsonl");
    std::vector<RawProblem> rows = {raw("p1", "remove 4 tokens then 9 more", "13"),
                                    raw("p2", "a 7 by 5 grid", "35")};

    std::string first_bytes;
    {
        VerdictCache cache(cache_path);
        SpanApprovingVerifier verifier;
        for (const auto& r : rows)
            for (const auto& m : extract_integers(r.question))
                verifier.approved_starts.insert(m.start);
        auto result = filter_seeds(rows, verifier, cache);
        CHECK(verifier.calls == 4);
        std::string path = tmp.file("seeds_a.jsonl");
        JsonlWriter out(path);
        for (const auto& s : result.seeds) out.write(seed_to_json(s));
        out.flush();
        first_bytes = read_file(path);
    }
    {
        // Warm cache: the verifier must never fire, and bytes must match.
        VerdictCache cache(cache_path);
        BombVerifier verifier;
        auto result = filter_seeds(rows, verifier, cache);
        std::string path = tmp.file("seeds_b.jsonl");
        JsonlWriter out(path);
        for (const auto& s : result.seeds) out.write(seed_to_json(s));
        out.flush();
        CHECK(read_file(path) == first_bytes);
    }
    SECTION("cache rows carry the documented fields") {
        bool checked = false;
        for_each_jsonl(cache_path, [&](const Json& row, std::size_t) {
            CHECK(row.contains("qhash"));
            CHECK(row.contains("start"));
            CHECK(row.contains("end"));
            CHECK(row.contains("verdict"));
            CHECK(row.contains("judge_model"));
            checked = true;
        });
        CHECK(checked);
    }
}

TEST_CASE("miniature corpus regression: 500 rows filter to 257 seeds") {
    // Mirrors the published filter funnel at desk scale: a synthetic 500-row
    // corpus and a pre-recorded verdict cache that pins every judgement.
    testsupport::TempDir tmp;
    std::vector<RawProblem> rows;
    std::vector<Json> cache_rows;
    std::size_t counter = 0;
    auto add_cached = [&](const RawProblem& r, bool verdict) {
        for (const auto& m : extract_integers(r.question))
            cache_rows.push_back(Json{{"qhash", VerdictCache::question_hash(r.question)},
                                      {"start", m.start},
                                      {"end", m.end},
                                      {"verdict", verdict},
                                      {"judge_model", "recorded"}});
    };
    for (int i = 0; i < 257; ++i) {  // pass everything
        RawProblem r = raw("pass" + std::to_string(counter++),
                           "split " + std::to_string(10 + i) + " coins among " +
                               std::to_string(2 + i % 7) + " pirates",
                           std::to_string(i));
        add_cached(r, true);
        rows.push_back(r);
    }
    for (int i = 0; i < 100; ++i)  // no integers at all
        rows.push_back(raw("noint" + std::to_string(counter++),
                           "count the vowels in this sentence", std::to_string(i)));
    for (int i = 0; i < 93; ++i)  // non-integer answer
        rows.push_back(raw("frac" + std::to_string(counter++),
                           "halve " + std::to_string(3 + i) + " cakes", "\\frac{1}{2}"));
    for (int i = 0; i < 50; ++i) {  // integers present, every verdict negative
        RawProblem r = raw("nokey" + std::to_string(counter++),
                           "year " + std::to_string(1900 + i) + " trivia",
                           std::to_string(i));
        add_cached(r, false);
        rows.push_back(r);
    }
    REQUIRE(rows.size() == 500);

    const std::string cache_path = tmp.file("verdicts.jsonl");
    {
        JsonlWriter out(cache_path);
        for (const Json& row : cache_rows) out.write(row);
    }
    VerdictCache cache(cache_path);
    BombVerifier verifier;  // proves the regression replays the recorded verdicts
    auto result = filter_seeds(rows, verifier, cache);
    CHECK(result.stats.raw == 500);
    CHECK(result.stats.integer_answer == 307);
    CHECK(result.stats.key_verified == 257);
    CHECK(result.seeds.size() == 257);
}

TEST_CASE("raw problem JSONL loader tolerates malformed rows") {
    testsupport::TempDir tmp;
    const std::string path = tmp.file("raw.jsonl");
    write_file(path,
               R"({"id":"a","question":"pick 3","answer":"3","source":"s"})" "\n"
               "this is not json\n"
               R"({"id":"b","question":"pick 4"})" "\n"
               R"({"id":"c","question":"pick 5","answer":5})" "\n");
    FilterStats stats;
    auto rows = load_raw_problems(path, &stats);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].id == "a");
    CHECK(rows[1].id == "c");
    CHECK(rows[1].answer == "5");  // numeric answers are stringified
    CHECK(stats.malformed == 2);
}
