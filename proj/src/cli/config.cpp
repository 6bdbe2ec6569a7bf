#include <openssl/evp.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ssep/cli.hpp"

namespace ssep {

namespace pt = boost::property_tree;

const char* method_name(Method m) { return m == Method::tracker ? "tracker" : "lattice"; }

Method parse_method(const std::string& s) {
    if (s == "tracker") return Method::tracker;
    if (s == "lattice") return Method::lattice;
    throw InvalidArgument("method must be 'tracker' or 'lattice', got '" + s + "'");
}

std::string fmt_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

namespace {

std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

template <class T>
T parse_number(const std::string& raw, const std::string& what) {
    std::string s = trim(raw);
    T v{};
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw InvalidArgument(what + ": cannot parse '" + raw + "'");
    return v;
}

bool parse_bool(const std::string& raw, const std::string& what) {
    std::string s = trim(raw);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw InvalidArgument(what + ": expected true/false, got '" + raw + "'");
}

}  // namespace

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    for (const auto& part : split(s, ',')) out.push_back(parse_number<int>(part, "n list"));
    return out;
}

void ExperimentConfig::validate() const {
    require(d == 2 || d == 3, "config: d must be 2 or 3");
    require(!ns.empty(), "config: empty n list");
    require(m >= 1, "config: torus multiplier m must be >= 1");
    require(T > 0 && std::isfinite(T), "config: horizon T must be positive");
    require(grid >= 1, "config: grid must be >= 1");
    require(workers >= 1, "config: workers must be >= 1");
    require(method == Method::lattice || !labels, "config: labels need method = lattice");
    for (int n : ns) {
        require(n >= 2, "config: every n must be >= 2");
        auto box = make_box(d, n, m, T);
        auto p = DensityProfile::parse(profile, d, double(m));
        p.validate();
        (void)box;
    }
}

std::string ExperimentConfig::serialize() const {
    std::ostringstream os;
    os << "[model]\n";
    os << "d = " << d << "\n";
    os << "n = ";
    for (std::size_t i = 0; i < ns.size(); ++i) os << (i ? "," : "") << ns[i];
    os << "\n";
    os << "m = " << m << "\n";
    os << "T = " << fmt_double(T) << "\n";
    os << "profile = " << profile << "\n";
    os << "\n[run]\n";
    os << "method = " << method_name(method) << "\n";
    os << "replicas = " << replicas << "\n";
    os << "seed = " << seed << "\n";
    os << "grid = " << grid << "\n";
    os << "qv = " << (qv ? "true" : "false") << "\n";
    os << "labels = " << (labels ? "true" : "false") << "\n";
    os << "workers = " << workers << "\n";
    os << "output = " << output << "\n";
    return os.str();
}

std::string ExperimentConfig::digest(int n) const {
    ExperimentConfig c = *this;
    c.ns = {n};
    c.workers = 1;
    c.output.clear();
    c.replicas = 0;  // replica i does not depend on the total
    return sha256_hex(std::string(kArtifactVersion) + "\n" + c.serialize()).substr(0, 16);
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw InvalidArgument(std::string("config: ") + e.what());
    }
    static const std::map<std::string, std::vector<std::string>> known = {
        {"model", {"d", "n", "m", "T", "profile"}},
        {"run", {"method", "replicas", "seed", "grid", "qv", "labels", "workers", "output"}},
    };
    for (const auto& [section, body] : tree) {
        auto it = known.find(section);
        if (it == known.end()) throw InvalidArgument("config: unknown section [" + section + "]");
        for (const auto& [key, _] : body) {
            if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
                throw InvalidArgument("config: unknown key '" + key + "' in [" + section + "]");
        }
    }
    ExperimentConfig c = std::move(base);
    auto get = [&](const char* path) { return tree.get_optional<std::string>(path); };
    if (auto v = get("model.d")) c.d = parse_number<int>(*v, "d");
    if (auto v = get("model.n")) c.ns = parse_int_list(*v);
    if (auto v = get("model.m")) c.m = parse_number<int>(*v, "m");
    if (auto v = get("model.T")) c.T = parse_number<double>(*v, "T");
    if (auto v = get("model.profile")) c.profile = trim(*v);
    if (auto v = get("run.method")) c.method = parse_method(trim(*v));
    if (auto v = get("run.replicas")) c.replicas = parse_number<std::size_t>(*v, "replicas");
    if (auto v = get("run.seed")) c.seed = parse_number<std::uint64_t>(*v, "seed");
    if (auto v = get("run.grid")) c.grid = parse_number<int>(*v, "grid");
    if (auto v = get("run.qv")) c.qv = parse_bool(*v, "qv");
    if (auto v = get("run.labels")) c.labels = parse_bool(*v, "labels");
    if (auto v = get("run.workers")) c.workers = parse_number<int>(*v, "workers");
    if (auto v = get("run.output")) c.output = trim(*v);
    return c;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr))
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

std::string file_sha256(const std::string& path) { return sha256_hex(read_file(path)); }

void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    os.write(content.data(), std::streamsize(content.size()));
    os.flush();
    if (!os) throw std::runtime_error("write to '" + path + "' failed (disk full?)");
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidArgument("cannot read '" + path + "'");
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

}  // namespace ssep
