#include <vframe/ingest.hpp>

#include <vframe/core/error.hpp>

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace vframe {

using nlohmann::json;

std::string_view to_string(Label label) noexcept
{
    switch (label) {
    case Label::Conspiracy: return "conspiracy";
    case Label::Debunking: return "debunking";
    case Label::Normal: return "normal";
    case Label::Unlabeled: return "unlabeled";
    }
    return "unlabeled";
}

std::optional<Label> parse_label(std::string_view text) noexcept
{
    for (Label l : {Label::Conspiracy, Label::Debunking, Label::Normal, Label::Unlabeled}) {
        if (text == to_string(l)) {
            return l;
        }
    }
    return std::nullopt;
}

namespace {

std::string where(const fs::path& path, std::size_t line_no)
{
    return path.string() + ":" + std::to_string(line_no) + ": ";
}

std::optional<std::string> optional_string(const json& obj, const char* key,
                                           const fs::path& path, std::size_t line_no)
{
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!it->is_string()) {
        throw ParseError(where(path, line_no) + "field '" + key + "' must be a string");
    }
    return it->get<std::string>();
}

fs::path resolve(const fs::path& base, const std::string& value)
{
    fs::path p(value);
    return p.is_absolute() ? p : base / p;
}

bool is_url(std::string_view s)
{
    return s.starts_with("http://") || s.starts_with("https://");
}

} // namespace

std::vector<VideoRecord> load_manifest(const fs::path& path, const ManifestOptions& options)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open manifest " + path.string());
    }
    const fs::path base = path.parent_path();

    std::vector<VideoRecord> records;
    std::unordered_map<std::string, std::size_t> first_line;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(where(path, line_no) + "invalid JSON: " + e.what());
        }
        if (!obj.is_object()) {
            throw ParseError(where(path, line_no) + "expected a JSON object");
        }

        VideoRecord rec;
        auto id = optional_string(obj, "id", path, line_no);
        if (!id || id->empty()) {
            throw ParseError(where(path, line_no) + "missing 'id'");
        }
        rec.id = *id;

        if (auto label = optional_string(obj, "label", path, line_no)) {
            auto parsed = parse_label(*label);
            if (!parsed) {
                throw ParseError(where(path, line_no) + "unknown label '" + *label
                                 + "' (expected conspiracy, debunking, normal or unlabeled)");
            }
            rec.label = *parsed;
        }
        if (auto v = optional_string(obj, "video_path", path, line_no)) {
            rec.video_path = resolve(base, *v);
        }
        if (auto v = optional_string(obj, "frames_dir", path, line_no)) {
            rec.frames_dir = resolve(base, *v);
        }
        if (auto v = optional_string(obj, "thumbnail", path, line_no)) {
            rec.thumbnail = is_url(*v) ? *v : resolve(base, *v).string();
        }
        if (auto v = optional_string(obj, "transcript_path", path, line_no)) {
            rec.transcript_path = resolve(base, *v);
        }
        if (auto it = obj.find("duration_s"); it != obj.end() && !it->is_null()) {
            if (!it->is_number() || it->get<double>() < 0.0 || !std::isfinite(it->get<double>())) {
                throw ParseError(where(path, line_no) + "'duration_s' must be a non-negative number");
            }
            rec.duration_s = it->get<double>();
        }

        if (options.require_visual_source && !rec.has_visual_source()) {
            throw DataError(where(path, line_no) + "record '" + rec.id
                            + "' has neither video_path nor frames_dir");
        }
        if (auto [it, inserted] = first_line.emplace(rec.id, line_no); !inserted) {
            throw DataError(where(path, line_no) + "duplicate id '" + rec.id
                            + "' (first seen on line " + std::to_string(it->second) + ")");
        }
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace vframe
