#include "support.hpp"

#include "storymem/errors.hpp"

#include <doctest.h>

#include <set>

using namespace storymem;
using namespace testsupport;

namespace {

Engine make_engine(EngineConfig cfg = {}) {
    return Engine(std::move(cfg), mock_backends(), "s1");
}

} // namespace

TEST_CASE("first turn opens a half round") {
    Engine engine = make_engine();
    auto outcome = engine.ingest_turn(make_turn(0, Speaker::User, "hi"));
    CHECK_FALSE(outcome.round_completed);
    CHECK(engine.state().next_turn_index == 1);
    CHECK(engine.current_round() == 0);
    CHECK(engine.state().pending_turn.has_value());
}

TEST_CASE("a pair of turns completes round 1") {
    Engine engine = make_engine();
    engine.ingest_turn(make_turn(0, Speaker::User, "hi"));
    auto outcome = engine.ingest_turn(make_turn(1, Speaker::Chatbot, "hello"));
    CHECK(outcome.round_completed);
    CHECK(outcome.round_index == 1);
    CHECK(engine.current_round() == 1);
    CHECK_FALSE(engine.state().pending_turn.has_value());
}

TEST_CASE("out-of-order turn is rejected with the expected index") {
    Engine engine = make_engine();
    engine.ingest_turn(make_turn(0, Speaker::User, "a"));
    engine.ingest_turn(make_turn(1, Speaker::Chatbot, "b"));
    engine.ingest_turn(make_turn(2, Speaker::User, "c"));
    try {
        engine.ingest_turn(make_turn(5, Speaker::Chatbot, "d"));
        FAIL("expected InputError");
    } catch (const InputError& e) {
        CHECK(e.expected_turn_index() == 3);
    }
    CHECK(engine.state().next_turn_index == 3); // rejection left no trace
}

TEST_CASE("empty text and broken alternation are rejected") {
    Engine engine = make_engine();
    CHECK_THROWS_AS(engine.ingest_turn(make_turn(0, Speaker::User, "")), InputError);
    engine.ingest_turn(make_turn(0, Speaker::User, "a"));
    CHECK_THROWS_AS(engine.ingest_turn(make_turn(1, Speaker::User, "again me")),
                    InputError);
    CHECK_THROWS_AS(engine.ingest_turn(make_turn(1, Speaker::Chatbot, "ok", "other")),
                    InputError);
}

TEST_CASE("either speaker may open the session") {
    Engine engine = make_engine();
    engine.ingest_turn(make_turn(0, Speaker::Chatbot, "welcome back"));
    auto outcome = engine.ingest_turn(make_turn(1, Speaker::User, "hello"));
    CHECK(outcome.round_completed);
}

TEST_CASE("pair_rounds pairs consecutive turns and drops the trailing half") {
    CHECK(pair_rounds(simple_transcript(4)).size() == 2);
    auto rounds = pair_rounds(simple_transcript(5));
    CHECK(rounds.size() == 2);
    CHECK(rounds[0].index == 1);
    CHECK(rounds[1].turn_span() == std::pair<int, int>{2, 3});
    CHECK(pair_rounds(Transcript{}).empty());
}

TEST_CASE("round count is always floor(turn_count / 2)") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> len(0, 41);
    for (int i = 0; i < 50; ++i) {
        int turns = len(rng);
        CHECK(pair_rounds(simple_transcript(turns)).size() ==
              static_cast<std::size_t>(turns / 2));
    }
}

TEST_CASE("engine round counting matches pair_rounds over a long session") {
    Engine engine = make_engine();
    Transcript transcript = simple_transcript(101);
    for (const auto& t : transcript.turns) engine.ingest_turn(t);
    CHECK(engine.current_round() == 50);
    CHECK(engine.state().pending_turn.has_value());
}

TEST_CASE("pool ids are never reused after eviction") {
    EngineConfig cfg;
    cfg.capacity_chars = 600; // tight enough to force evictions
    Engine engine(cfg, mock_backends(), "s1");
    Transcript transcript = simple_transcript(240);

    std::set<std::string> seen;
    std::vector<std::string> minted;
    for (const auto& t : transcript.turns) {
        auto outcome = engine.ingest_turn(t);
        for (const auto& id : outcome.new_item_ids) {
            CHECK(seen.insert(id).second); // fresh id every time
            minted.push_back(id);
        }
    }
    CHECK(engine.stats().evictions > 0);
    CHECK(minted.size() > engine.pool().items.size());
}

TEST_CASE("transcript validation catches gaps and repeats") {
    Transcript t = simple_transcript(4);
    t.turns[2].turn_index = 5;
    CHECK_THROWS_AS(t.validate(), InputError);

    Transcript repeat = simple_transcript(4);
    repeat.turns[1].speaker = Speaker::User;
    CHECK_THROWS_AS(repeat.validate(), InputError);

    CHECK_NOTHROW(simple_transcript(9).validate());
}
