#include <vframe/ingest.hpp>

#include <vframe/core/error.hpp>

#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <regex>

namespace vframe {

namespace {

struct ParsedUrl {
    std::string scheme;
    std::string host;
    int port = 0;
    std::string target;
};

ParsedUrl parse_url(std::string_view url)
{
    static const std::regex pattern(R"((https?)://([^/:?#]+)(?::(\d+))?([^#]*))", std::regex::icase);
    std::cmatch m;
    if (!std::regex_match(url.begin(), url.end(), m, pattern)) {
        throw ConfigError("malformed URL: " + std::string(url));
    }
    ParsedUrl out;
    out.scheme = m[1].str();
    for (auto& c : out.scheme) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    out.host = m[2].str();
    out.port = m[3].matched ? std::stoi(m[3].str()) : (out.scheme == "https" ? 443 : 80);
    out.target = m[4].length() ? m[4].str() : "/";
    return out;
}

const char* proxy_env(const std::string& scheme)
{
    const char* names_https[] = {"HTTPS_PROXY", "https_proxy"};
    const char* names_http[] = {"HTTP_PROXY", "http_proxy"};
    for (const char* name : scheme == "https" ? names_https : names_http) {
        if (const char* v = std::getenv(name); v && *v) {
            return v;
        }
    }
    return nullptr;
}

bool proxy_bypassed(const std::string& host)
{
    const char* no_proxy = std::getenv("NO_PROXY");
    if (!no_proxy) {
        no_proxy = std::getenv("no_proxy");
    }
    if (!no_proxy) {
        return false;
    }
    std::string list = no_proxy;
    std::size_t start = 0;
    while (start <= list.size()) {
        const std::size_t end = std::min(list.find(',', start), list.size());
        std::string entry = list.substr(start, end - start);
        entry.erase(0, entry.find_first_not_of(' '));
        entry.erase(entry.find_last_not_of(' ') + 1);
        if (!entry.empty() && entry.front() == '.') {
            entry.erase(0, 1);
        }
        if (entry == "*" || (!entry.empty() && host.size() >= entry.size()
                             && host.compare(host.size() - entry.size(), entry.size(), entry) == 0)) {
            return true;
        }
        start = end + 1;
    }
    return false;
}

} // namespace

fs::path fetch_thumbnail(std::string_view url, const fs::path& out_path, const FetchOptions& options)
{
    const ParsedUrl u = parse_url(url);
    httplib::Client client(u.scheme + "://" + u.host + ":" + std::to_string(u.port));
    const auto secs = static_cast<time_t>(options.timeout.count());
    client.set_connection_timeout(secs, 0);
    client.set_read_timeout(secs, 0);
    client.set_write_timeout(secs, 0);
    client.set_follow_location(true);
    if (const char* proxy = proxy_env(u.scheme); proxy && !proxy_bypassed(u.host)) {
        const ParsedUrl p = parse_url(proxy);
        client.set_proxy(p.host, p.port);
    }

    std::error_code ec;
    if (fs::is_regular_file(out_path, ec)) {
        const auto local_size = fs::file_size(out_path, ec);
        if (auto head = client.Head(u.target); head && head->status >= 200 && head->status < 300
                                               && head->has_header("Content-Length")) {
            const auto remote = std::stoull(head->get_header_value("Content-Length"));
            if (!ec && remote == local_size) {
                return out_path;
            }
        }
    }

    auto res = client.Get(u.target);
    if (!res) {
        throw ExternalError("fetching " + std::string(url) + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw ExternalError("fetching " + std::string(url) + " failed with HTTP status "
                            + std::to_string(res->status));
    }
    if (out_path.has_parent_path()) {
        fs::create_directories(out_path.parent_path());
    }
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + out_path.string());
    }
    out.write(res->body.data(), static_cast<std::streamsize>(res->body.size()));
    return out_path;
}

} // namespace vframe
