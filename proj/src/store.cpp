#include "storymem/store.hpp"

#include "storymem/errors.hpp"
#include "storymem/text.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

using nlohmann::json;

namespace storymem::store {

namespace {

json turn_to_json(const DialogueTurn& t) {
    return {{"round_index", t.round_index},
            {"session_id", t.session_id},
            {"speaker", to_string(t.speaker)},
            {"text", t.text},
            {"turn_index", t.turn_index}};
}

DialogueTurn turn_from_json(const json& j) {
    DialogueTurn t;
    t.session_id = j.value("session_id", "");
    t.turn_index = j.at("turn_index").get<int>();
    t.speaker = speaker_from_string(j.at("speaker").get<std::string>());
    t.text = j.at("text").get<std::string>();
    t.round_index = j.value("round_index", t.turn_index / 2 + 1);
    return t;
}

json unit_to_json(const nsb::NarrativeUnit& u) {
    return {{"child_ids", u.child_ids},
            {"id", u.id},
            {"index_at_level", u.index_at_level},
            {"level", u.level},
            {"span_rounds", {u.span_rounds.first, u.span_rounds.second}},
            {"span_turns", {u.span_turns.first, u.span_turns.second}},
            {"text", u.text}};
}

nsb::NarrativeUnit unit_from_json(const json& j) {
    nsb::NarrativeUnit u;
    u.child_ids = j.at("child_ids").get<std::vector<std::string>>();
    u.id = j.at("id").get<std::string>();
    u.index_at_level = j.at("index_at_level").get<int>();
    u.level = j.at("level").get<int>();
    u.span_rounds = {j.at("span_rounds")[0].get<int>(), j.at("span_rounds")[1].get<int>()};
    u.span_turns = {j.at("span_turns")[0].get<int>(), j.at("span_turns")[1].get<int>()};
    u.text = j.at("text").get<std::string>();
    return u;
}

json record_to_json(const UnitRecord& r) {
    return {{"child_ids", r.child_ids},
            {"id", r.id},
            {"index_at_level", r.index_at_level},
            {"level", r.level},
            {"span_rounds", {r.span_rounds.first, r.span_rounds.second}},
            {"span_turns", {r.span_turns.first, r.span_turns.second}}};
}

UnitRecord record_from_json(const json& j) {
    UnitRecord r;
    r.child_ids = j.at("child_ids").get<std::vector<std::string>>();
    r.id = j.at("id").get<std::string>();
    r.index_at_level = j.at("index_at_level").get<int>();
    r.level = j.at("level").get<int>();
    r.span_rounds = {j.at("span_rounds")[0].get<int>(), j.at("span_rounds")[1].get<int>()};
    r.span_turns = {j.at("span_turns")[0].get<int>(), j.at("span_turns")[1].get<int>()};
    return r;
}

json item_to_json(const MemoryItem& item) {
    // last_score is deliberately absent: scores are recomputed on load.
    return {{"creation_round", item.creation_round},
            {"eviction_exempt", item.eviction_exempt},
            {"id", item.id},
            {"kind", to_string(item.kind)},
            {"retrieval_rounds", item.retrieval_rounds},
            {"source_span", {item.source_span.first, item.source_span.second}},
            {"suppression_halvings", item.suppression_halvings},
            {"text", item.text}};
}

MemoryItem item_from_json(const json& j) {
    MemoryItem item;
    item.creation_round = j.at("creation_round").get<int>();
    item.eviction_exempt = j.at("eviction_exempt").get<bool>();
    item.id = j.at("id").get<std::string>();
    item.kind = memory_kind_from_string(j.at("kind").get<std::string>());
    item.retrieval_rounds = j.at("retrieval_rounds").get<std::vector<int>>();
    item.source_span = {j.at("source_span")[0].get<int>(), j.at("source_span")[1].get<int>()};
    item.suppression_halvings = j.at("suppression_halvings").get<int>();
    item.text = j.at("text").get<std::string>();
    return item;
}

json state_to_json(const EngineState& s) {
    json buffers;
    buffers["first_speaker"] =
        s.first_speaker ? json(to_string(*s.first_speaker)) : json(nullptr);
    buffers["next_turn_index"] = s.next_turn_index;
    buffers["pending_turn"] = s.pending_turn ? turn_to_json(*s.pending_turn) : json(nullptr);
    json window = json::array();
    for (const auto& t : s.pcb_window) window.push_back(turn_to_json(t));
    buffers["pcb_window"] = window;
    buffers["session_id"] = s.session_id;

    json nsb_doc;
    json rounds = json::array();
    for (const auto& r : s.nsb_buffer)
        rounds.push_back({{"index", r.index},
                          {"turns", {turn_to_json(r.first), turn_to_json(r.second)}}});
    nsb_doc["buffer_rounds"] = rounds;
    nsb_doc["next_index"] = {s.next_unit_index[0], s.next_unit_index[1], s.next_unit_index[2]};
    json p1 = json::array(), p2 = json::array();
    for (const auto& u : s.pending_level1) p1.push_back(unit_to_json(u));
    for (const auto& u : s.pending_level2) p2.push_back(unit_to_json(u));
    nsb_doc["pending_level1"] = p1;
    nsb_doc["pending_level2"] = p2;
    json units = json::array();
    for (const auto& [id, rec] : s.units) units.push_back(record_to_json(rec));
    nsb_doc["units"] = units;

    json persona;
    json entries = json::object();
    for (const auto& [key, values] : s.sketch.entries) {
        json list = json::array();
        for (const auto& sv : values)
            list.push_back({{"stamp", sv.stamp}, {"value", sv.value}});
        entries[key] = list;
    }
    persona["entries"] = entries;
    persona["item_ids"] = s.persona_item_ids;
    persona["last_snapshot_round"] = s.sketch.last_snapshot_round;

    json pool;
    pool["capacity_chars"] =
        s.pool.capacity_chars ? json(*s.pool.capacity_chars) : json(nullptr);
    json items = json::array();
    for (const auto& [id, item] : s.pool.items) items.push_back(item_to_json(item));
    pool["items"] = items;
    pool["next_item_seq"] = s.next_item_seq;

    return {{"buffers", buffers},
            {"nsb", nsb_doc},
            {"persona", persona},
            {"pool", pool},
            {"round_counter", s.pool.current_round}};
}

EngineState state_from_json(const json& j) {
    EngineState s;
    const auto& buffers = j.at("buffers");
    if (!buffers.at("first_speaker").is_null())
        s.first_speaker = speaker_from_string(buffers["first_speaker"].get<std::string>());
    s.next_turn_index = buffers.at("next_turn_index").get<int>();
    if (!buffers.at("pending_turn").is_null())
        s.pending_turn = turn_from_json(buffers["pending_turn"]);
    for (const auto& t : buffers.at("pcb_window")) s.pcb_window.push_back(turn_from_json(t));
    s.session_id = buffers.at("session_id").get<std::string>();

    const auto& nsb_doc = j.at("nsb");
    for (const auto& r : nsb_doc.at("buffer_rounds")) {
        Round round;
        round.index = r.at("index").get<int>();
        round.first = turn_from_json(r.at("turns")[0]);
        round.second = turn_from_json(r.at("turns")[1]);
        s.nsb_buffer.push_back(std::move(round));
    }
    for (int i = 0; i < 3; ++i) s.next_unit_index[i] = nsb_doc.at("next_index")[i].get<int>();
    for (const auto& u : nsb_doc.at("pending_level1"))
        s.pending_level1.push_back(unit_from_json(u));
    for (const auto& u : nsb_doc.at("pending_level2"))
        s.pending_level2.push_back(unit_from_json(u));
    for (const auto& u : nsb_doc.at("units")) {
        UnitRecord rec = record_from_json(u);
        s.units.emplace(rec.id, std::move(rec));
    }

    const auto& persona = j.at("persona");
    for (const auto& [key, list] : persona.at("entries").items()) {
        std::vector<pcb::StampedValue> values;
        for (const auto& sv : list)
            values.push_back({sv.at("value").get<std::string>(), sv.at("stamp").get<int>()});
        s.sketch.entries.emplace(key, std::move(values));
    }
    s.persona_item_ids =
        persona.at("item_ids").get<std::map<std::string, std::string>>();
    s.sketch.last_snapshot_round = persona.at("last_snapshot_round").get<int>();

    const auto& pool = j.at("pool");
    if (!pool.at("capacity_chars").is_null())
        s.pool.capacity_chars = pool["capacity_chars"].get<long>();
    for (const auto& item : pool.at("items")) {
        MemoryItem mi = item_from_json(item);
        s.pool.items.emplace(mi.id, std::move(mi));
    }
    s.next_item_seq = pool.at("next_item_seq").get<long>();
    s.pool.current_round = j.at("round_counter").get<int>();
    return s;
}

} // namespace

std::string save(const StateDocument& doc) {
    json payload = {{"backend_identities", doc.backend_identities},
                    {"config_hash", doc.config_hash},
                    {"state", state_to_json(doc.state)}};
    const std::string payload_text = payload.dump();
    json wrapper = {{"checksum", fnv1a64_hex(payload_text)},
                    {"format_version", doc.format_version},
                    {"payload", payload}};
    return wrapper.dump() + "\n";
}

StateDocument load(const std::string& bytes) {
    json wrapper;
    try {
        wrapper = json::parse(bytes);
    } catch (const json::exception& e) {
        throw StoreError(ErrorKind::StoreCorrupt,
                         std::string("state document unreadable: ") + e.what());
    }
    try {
        const int version = wrapper.at("format_version").get<int>();
        if (version > kFormatVersion)
            throw StoreError(ErrorKind::StoreVersion,
                             "state document format " + std::to_string(version) +
                                 " is newer than supported " +
                                 std::to_string(kFormatVersion));
        const std::string payload_text = wrapper.at("payload").dump();
        if (wrapper.at("checksum").get<std::string>() != fnv1a64_hex(payload_text))
            throw StoreError(ErrorKind::StoreCorrupt, "state document checksum mismatch");

        StateDocument doc;
        doc.format_version = version;
        doc.config_hash = wrapper["payload"].at("config_hash").get<std::string>();
        doc.backend_identities = wrapper["payload"]
                                     .at("backend_identities")
                                     .get<std::map<std::string, std::string>>();
        doc.state = state_from_json(wrapper["payload"].at("state"));
        return doc;
    } catch (const json::exception& e) {
        throw StoreError(ErrorKind::StoreCorrupt,
                         std::string("state document malformed: ") + e.what());
    }
}

std::string turn_to_json_line(const DialogueTurn& turn) {
    return turn_to_json(turn).dump();
}

DialogueTurn turn_from_json_line(const std::string& line) {
    try {
        return turn_from_json(json::parse(line));
    } catch (const json::exception& e) {
        throw InputError(std::string("bad turn record: ") + e.what());
    }
}

Transcript read_transcript_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open transcript file '" + path + "'");
    Transcript transcript;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            transcript.turns.push_back(turn_from_json_line(line));
        } catch (const Error& e) {
            throw InputError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (transcript.session_id.empty())
            transcript.session_id = transcript.turns.back().session_id;
    }
    transcript.validate();
    return transcript;
}

void append_event_log(const std::string& path, const std::vector<DialogueTurn>& turns) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw InputError("cannot open event log '" + path + "' for append");
    for (const auto& t : turns) out << turn_to_json_line(t) << "\n";
}

void append_eviction_log(const std::string& path,
                         const std::vector<EvictionRecord>& records) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw InputError("cannot open eviction log '" + path + "' for append");
    for (const auto& r : records) {
        // Hand-rolled line so the score keeps its canonical 9-digit form.
        out << "{\"effective_score\":" << canonical_real(r.effective_score)
            << ",\"evicted_id\":" << json(r.evicted_id).dump()
            << ",\"policy\":" << json(r.policy).dump() << ",\"round\":" << r.round
            << "}\n";
    }
}

std::vector<EvictionRecord> read_eviction_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open eviction log '" + path + "'");
    std::vector<EvictionRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        try {
            json j = json::parse(line);
            records.push_back({j.at("round").get<int>(),
                               j.at("evicted_id").get<std::string>(),
                               j.at("effective_score").get<double>(),
                               j.at("policy").get<std::string>()});
        } catch (const json::exception& e) {
            throw InputError("bad eviction record: " + std::string(e.what()));
        }
    }
    return records;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write file '" + path + "'");
    out << content;
}

} // namespace storymem::store
