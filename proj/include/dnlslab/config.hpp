#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dnlslab {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Flat key = value configuration, one pair per line, # starts a comment.
class KvConfig {
public:
    KvConfig() = default;

    static KvConfig from_string(const std::string& text) {
        KvConfig cfg;
        std::istringstream is(text);
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("config: missing '=' on line " + std::to_string(lineno));
            std::string key = trim(trimmed.substr(0, eq));
            std::string val = trim(trimmed.substr(eq + 1));
            if (key.empty()) throw std::invalid_argument("config: empty key on line " + std::to_string(lineno));
            cfg.kv_[key] = val;
        }
        return cfg;
    }

    static KvConfig load(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw std::invalid_argument("config: cannot open " + path);
        std::stringstream ss;
        ss << is.rdbuf();
        return from_string(ss.str());
    }

    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& dflt) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? dflt : it->second;
    }
    double get_double(const std::string& key, double dflt) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return dflt;
        size_t pos = 0;
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("config: bad number for " + key);
        return v;
    }
    long long get_int(const std::string& key, long long dflt) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return dflt;
        size_t pos = 0;
        long long v = std::stoll(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("config: bad integer for " + key);
        return v;
    }
    std::vector<double> get_list(const std::string& key, std::vector<double> dflt) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return dflt;
        std::vector<double> out;
        std::istringstream is(it->second);
        std::string tok;
        while (std::getline(is, tok, ',')) out.push_back(std::stod(tok));
        return out;
    }
    void set(const std::string& key, const std::string& val) { kv_[key] = val; }

    // View for one experiment: "prefix.key" wins over a shared bare "key".
    KvConfig subset(const std::string& prefix) const {
        KvConfig out;
        for (const auto& [k, v] : kv_)
            if (k.find('.') == std::string::npos) out.kv_[k] = v;
        const std::string p = prefix + ".";
        for (const auto& [k, v] : kv_)
            if (k.rfind(p, 0) == 0) out.kv_[k.substr(p.size())] = v;
        return out;
    }

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    static std::string trim(const std::string& s) {
        size_t a = s.find_first_not_of(" \t\r");
        size_t b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    }
    std::map<std::string, std::string> kv_;
};

// UTF-8 key-value run manifest with nested sections by indentation.
class Manifest {
public:
    void set(const std::string& section, const std::string& key, const std::string& value) {
        section_for(section).emplace_back(key, value);
    }
    void set(const std::string& section, const std::string& key, double value) {
        set(section, key, format_double(value));
    }
    void set(const std::string& section, const std::string& key, long long value) {
        set(section, key, std::to_string(value));
    }
    void set_flag(const std::string& section, const std::string& key, bool pass) {
        set(section, key, std::string(pass ? "pass" : "FAIL"));
    }

    std::string render() const {
        std::string out;
        for (const auto& [name, entries] : sections_) {
            if (!name.empty()) out += name + "\n";
            for (const auto& [k, v] : entries) out += (name.empty() ? "" : "  ") + k + " = " + v + "\n";
        }
        return out;
    }

    void save(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw std::runtime_error("manifest: cannot open " + path);
        os << render();
    }

private:
    std::vector<std::pair<std::string, std::string>>& section_for(const std::string& name) {
        for (auto& [n, entries] : sections_)
            if (n == name) return entries;
        sections_.emplace_back(name, std::vector<std::pair<std::string, std::string>>{});
        return sections_.back().second;
    }
    std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections_;
};

// CSV with a mandatory header row; numbers written with %.17g.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header) : os_(path) {
        if (!os_) throw std::runtime_error("csv: cannot open " + path);
        for (size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
        os_ << "\n";
        columns_ = header.size();
    }
    void row(const std::vector<double>& values) {
        if (values.size() != columns_) throw std::invalid_argument("csv: column count mismatch");
        for (size_t i = 0; i < values.size(); ++i) os_ << (i ? "," : "") << format_double(values[i]);
        os_ << "\n";
    }
    void row_strings(const std::vector<std::string>& values) {
        if (values.size() != columns_) throw std::invalid_argument("csv: column count mismatch");
        for (size_t i = 0; i < values.size(); ++i) os_ << (i ? "," : "") << values[i];
        os_ << "\n";
    }

private:
    std::ofstream os_;
    size_t columns_;
};

}  // namespace dnlslab
