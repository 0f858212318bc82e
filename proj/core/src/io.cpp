#include "posyn/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "posyn/error.hpp"

namespace posyn {

using nlohmann::json;

std::string format_exact(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_fixed(double v, int decimals) {
    if (v == 0.0) v = 0.0;  // folds -0 into 0 so output text is stable
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
    std::string s(buf, res.ptr);
    if (s.starts_with('-') && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

double parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\r' || text.back() == '\t')) {
        text.remove_suffix(1);
    }
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw IoError("not a number: '" + std::string(text) + "'");
    }
    return v;
}

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw IoError("CSV column '" + std::string(name) + "' not found");
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

std::string trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    return std::string(s);
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return in;
}

}  // namespace

CsvTable read_numeric_csv(const fs::path& path) {
    auto in = open_in(path);
    CsvTable table;
    std::string line;
    bool have_header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#' || line == "\r") continue;
        auto cells = split(line);
        if (!have_header) {
            for (auto c : cells) table.header.push_back(trim(c));
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                          std::to_string(table.header.size()) + " cells");
        }
        std::vector<double> row;
        row.reserve(cells.size());
        try {
            for (auto c : cells) row.push_back(parse_double(c));
        } catch (const IoError& e) {
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        table.rows.push_back(std::move(row));
    }
    if (!have_header) throw IoError(path.string() + ": empty CSV");
    return table;
}

std::vector<std::vector<std::string>> read_text_csv(const fs::path& path) {
    auto in = open_in(path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line == "\r") continue;
        std::vector<std::string> row;
        for (auto c : split(line)) row.push_back(trim(c));
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_text_file(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_text_file(const fs::path& path) {
    auto in = open_in(path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// ---------------------------------------------------------------------------
// Cohort ingestion

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        throw ValidationError(where + ": missing field '" + key + "'");
    }
    return *it;
}

SampledSeries read_emg(const fs::path& path) {
    auto table = read_numeric_csv(path);
    if (table.header.empty() || table.header[0] != "t_s") {
        throw ValidationError(path.string() + ": first EMG column must be t_s");
    }
    const auto channels = static_cast<Index>(table.header.size()) - 1;
    if (channels != kChannelCount) {
        throw ValidationError(path.string() + ": expected 14 EMG channels, found " +
                              std::to_string(channels));
    }
    SampledSeries s;
    s.t.reserve(table.rows.size());
    s.values.resize(channels, static_cast<Index>(table.rows.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        s.t.push_back(table.rows[r][0]);
        for (Index c = 0; c < channels; ++c) s.values(c, static_cast<Index>(r)) = table.rows[r][c + 1];
    }
    return s;
}

std::array<SampledSeries, kPlateCount> read_plates(const fs::path& path) {
    auto table = read_numeric_csv(path);
    static const char* names[] = {"t_s", "fx", "fy", "fz", "mx", "my", "mz", "plate_id"};
    if (table.header.size() != 8) throw ValidationError(path.string() + ": plate CSV needs 8 columns");
    for (std::size_t i = 0; i < 8; ++i) {
        if (table.header[i] != names[i]) {
            throw ValidationError(path.string() + ": unexpected plate column '" + table.header[i] + "'");
        }
    }
    std::array<std::vector<const std::vector<double>*>, kPlateCount> by_plate;
    for (const auto& row : table.rows) {
        const double id = row[7];
        if (id != 0.0 && id != 1.0) throw ValidationError(path.string() + ": plate_id must be 0 or 1");
        by_plate[static_cast<int>(id)].push_back(&row);
    }
    std::array<SampledSeries, kPlateCount> out;
    for (int p = 0; p < kPlateCount; ++p) {
        auto& s = out[p];
        s.values.resize(kPlateRows, static_cast<Index>(by_plate[p].size()));
        for (std::size_t r = 0; r < by_plate[p].size(); ++r) {
            const auto& row = *by_plate[p][r];
            s.t.push_back(row[0]);
            for (int c = 0; c < kPlateRows; ++c) s.values(c, static_cast<Index>(r)) = row[c + 1];
        }
    }
    return out;
}

SampledSeries read_pelvic(const fs::path& path) {
    auto table = read_numeric_csv(path);
    if (table.header != std::vector<std::string>{"t_s", "x_mm", "y_mm"}) {
        throw ValidationError(path.string() + ": pelvic CSV header must be t_s,x_mm,y_mm");
    }
    SampledSeries s;
    s.values.resize(2, static_cast<Index>(table.rows.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        s.t.push_back(table.rows[r][0]);
        s.values(0, static_cast<Index>(r)) = table.rows[r][1];
        s.values(1, static_cast<Index>(r)) = table.rows[r][2];
    }
    return s;
}

fs::path resolve(const fs::path& base, const std::string& rel) {
    fs::path p(rel);
    return p.is_absolute() ? p : base / p;
}

void require_file(const fs::path& p) {
    if (!fs::is_regular_file(p)) throw IoError("missing file '" + p.string() + "'");
}

}  // namespace

Cohort load_cohort(const fs::path& manifest_path) {
    require_file(manifest_path);
    json manifest;
    try {
        manifest = json::parse(read_text_file(manifest_path));
    } catch (const json::exception& e) {
        throw IoError(manifest_path.string() + ": invalid JSON: " + e.what());
    }
    const fs::path base = manifest_path.parent_path();
    const std::string where = manifest_path.string();

    Cohort cohort;
    if (auto it = manifest.find("trials_per_session"); it != manifest.end() && !it->is_null()) {
        cohort.trials_per_session = it->get<int>();
    }
    cohort.allow_dropped = manifest.value("allow_dropped", false);

    try {
        for (const auto& js : require(manifest, "subjects", where)) {
            SubjectInfo s;
            s.id = require(js, "id", where).get<std::string>();
            const std::string sw = where + " subject " + s.id;
            s.group = parse_group(require(js, "group", sw).get<std::string>());
            s.handedness = parse_handedness(require(js, "handedness", sw).get<std::string>());
            s.body_weight_n = require(js, "body_weight_N", sw).get<double>();
            if (auto it = js.find("thresholds_N"); it != js.end()) {
                for (auto& [label, value] : it->items()) {
                    s.thresholds_n[parse_direction(label, s.handedness)] = value.get<double>();
                }
            }
            cohort.subjects.push_back(std::move(s));
        }

        for (const auto& jt : require(manifest, "trials", where)) {
            TrialRecording trial;
            trial.trial_id = require(jt, "trial_id", where).get<int>();
            const std::string tw = where + " trial " + std::to_string(trial.trial_id);
            trial.subject_id = require(jt, "subject", tw).get<std::string>();
            const auto& subject = cohort.subject(trial.subject_id);
            trial.group = subject.group;
            trial.session = jt.value("session", 1);
            trial.direction =
                parse_direction(require(jt, "direction", tw).get<std::string>(), subject.handedness);
            trial.valid = jt.value("valid", true);

            const auto& rates = require(jt, "rates", tw);
            trial.rate_emg = require(rates, "emg_hz", tw).get<double>();
            trial.rate_plate = require(rates, "plate_hz", tw).get<double>();
            trial.rate_marker = require(rates, "marker_hz", tw).get<double>();

            const auto& events = require(jt, "events", tw);
            trial.t_vr_onset = require(events, "t_vr_onset_s", tw).get<double>();
            trial.t_robust_onset = require(events, "t_robust_onset_s", tw).get<double>();
            trial.t_end = require(events, "t_end_s", tw).get<double>();

            if (auto it = jt.find("outcome"); it != jt.end()) {
                trial.outcome.caught = it->value("caught", false);
                trial.outcome.thrown = it->value("thrown", false);
                trial.outcome.score = it->value("score", 0);
            }

            const auto& files = require(jt, "files", tw);
            const auto emg_path = resolve(base, require(files, "emg", tw).get<std::string>());
            const auto plate_path = resolve(base, require(files, "plate", tw).get<std::string>());
            const auto pelvic_path = resolve(base, require(files, "pelvic", tw).get<std::string>());
            require_file(emg_path);
            require_file(plate_path);
            require_file(pelvic_path);
            trial.emg = read_emg(emg_path);
            trial.plates = read_plates(plate_path);
            trial.pelvic = read_pelvic(pelvic_path);
            cohort.trials.push_back(std::move(trial));
        }
    } catch (const json::exception& e) {
        throw ValidationError(where + ": malformed manifest: " + e.what());
    }

    validate(cohort);
    return cohort;
}

// ---------------------------------------------------------------------------
// Cohort serialization

namespace {

std::string trial_stem(const TrialRecording& t) {
    return t.subject_id + "_s" + std::to_string(t.session) + "_t" + std::to_string(t.trial_id);
}

std::string emg_csv(const SampledSeries& s) {
    std::string out = "t_s";
    char name[16];
    for (int c = 0; c < s.channels(); ++c) {
        std::snprintf(name, sizeof name, ",ch%02d", c);
        out += name;
    }
    out += '\n';
    for (Index i = 0; i < s.samples(); ++i) {
        out += format_exact(s.t[static_cast<std::size_t>(i)]);
        for (Index c = 0; c < s.channels(); ++c) {
            out += ',';
            out += format_exact(s.values(c, i));
        }
        out += '\n';
    }
    return out;
}

std::string plate_csv(const std::array<SampledSeries, kPlateCount>& plates) {
    std::string out = "t_s,fx,fy,fz,mx,my,mz,plate_id\n";
    for (int p = 0; p < kPlateCount; ++p) {
        const auto& s = plates[p];
        for (Index i = 0; i < s.samples(); ++i) {
            out += format_exact(s.t[static_cast<std::size_t>(i)]);
            for (int c = 0; c < kPlateRows; ++c) {
                out += ',';
                out += format_exact(s.values(c, i));
            }
            out += ',';
            out += std::to_string(p);
            out += '\n';
        }
    }
    return out;
}

std::string pelvic_csv(const SampledSeries& s) {
    std::string out = "t_s,x_mm,y_mm\n";
    for (Index i = 0; i < s.samples(); ++i) {
        out += format_exact(s.t[static_cast<std::size_t>(i)]);
        out += ',';
        out += format_exact(s.values(0, i));
        out += ',';
        out += format_exact(s.values(1, i));
        out += '\n';
    }
    return out;
}

}  // namespace

fs::path save_cohort(const Cohort& cohort, const fs::path& dir) {
    fs::create_directories(dir / "trials");
    json manifest;
    manifest["format"] = "posyn-cohort/1";
    if (cohort.trials_per_session) manifest["trials_per_session"] = *cohort.trials_per_session;
    manifest["allow_dropped"] = cohort.allow_dropped;

    json subjects = json::array();
    for (const auto& s : cohort.subjects) {
        json js;
        js["id"] = s.id;
        js["group"] = to_string(s.group);
        js["handedness"] = to_string(s.handedness);
        js["body_weight_N"] = s.body_weight_n;
        json th = json::object();
        for (const auto& [d, v] : s.thresholds_n) th[std::string(to_string(d))] = v;
        js["thresholds_N"] = th;
        subjects.push_back(js);
    }
    manifest["subjects"] = subjects;

    json trials = json::array();
    for (const auto& t : cohort.trials) {
        const std::string stem = trial_stem(t);
        const std::string emg_rel = "trials/" + stem + "_emg.csv";
        const std::string plate_rel = "trials/" + stem + "_plate.csv";
        const std::string pelvic_rel = "trials/" + stem + "_pelvic.csv";
        write_text_file(dir / emg_rel, emg_csv(t.emg));
        write_text_file(dir / plate_rel, plate_csv(t.plates));
        write_text_file(dir / pelvic_rel, pelvic_csv(t.pelvic));

        json jt;
        jt["trial_id"] = t.trial_id;
        jt["subject"] = t.subject_id;
        jt["session"] = t.session;
        jt["direction"] = to_string(t.direction);
        jt["valid"] = t.valid;
        jt["rates"] = {{"emg_hz", t.rate_emg}, {"plate_hz", t.rate_plate}, {"marker_hz", t.rate_marker}};
        jt["events"] = {{"t_vr_onset_s", t.t_vr_onset},
                        {"t_robust_onset_s", t.t_robust_onset},
                        {"t_end_s", t.t_end}};
        jt["outcome"] = {{"caught", t.outcome.caught},
                         {"thrown", t.outcome.thrown},
                         {"score", t.outcome.score}};
        jt["files"] = {{"emg", emg_rel}, {"plate", plate_rel}, {"pelvic", pelvic_rel}};
        trials.push_back(jt);
    }
    manifest["trials"] = trials;

    const fs::path manifest_path = dir / "manifest.json";
    write_text_file(manifest_path, manifest.dump(2) + "\n");
    return manifest_path;
}

}  // namespace posyn
