#ifndef SNIPS_HARNESS_HPP
#define SNIPS_HARNESS_HPP

// Minimal registry for named statistical checks with per-check timing,
// failure containment, and text / JUnit XML reporting.

#include "core.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace snips::harness {

struct Outcome {
    double statistic = 0.0;
    std::string threshold;
    bool pass = false;
    std::string detail;
};

struct TestResult {
    std::string name;
    std::string description;
    double statistic = 0.0;
    std::string threshold;
    bool pass = false;
    double wall_seconds = 0.0;
    std::string detail;
};

using SuiteResult = std::vector<TestResult>;

class Suite {
public:
    using Body = std::function<Outcome(std::uint64_t seed)>;

    void add(std::string name, std::string description, Body body) {
        for (const auto& e : entries_)
            if (e.name == name) throw ArgumentError("duplicate test name: " + name);
        entries_.push_back({std::move(name), std::move(description), std::move(body)});
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& e : entries_) out.push_back(e.name);
        return out;
    }

    /// Runs the selected tests (all when empty) in registration order. Unknown names are
    /// rejected before anything runs. Exceptions become failing results.
    SuiteResult run(const std::vector<std::string>& selection, std::uint64_t seed,
                    const std::function<void(const TestResult&)>& on_result = {}) const {
        for (const auto& wanted : selection) {
            bool found = false;
            for (const auto& e : entries_) found = found || e.name == wanted;
            if (!found) {
                std::string avail;
                for (const auto& n : names()) avail += (avail.empty() ? "" : ", ") + n;
                throw ArgumentError("unknown test '" + wanted + "'; available: " + avail);
            }
        }
        SuiteResult results;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const Entry& e = entries_[i];
            if (!selection.empty() && std::find(selection.begin(), selection.end(), e.name) == selection.end())
                continue;
            TestResult r;
            r.name = e.name;
            r.description = e.description;
            const auto start = std::chrono::steady_clock::now();
            try {
                const Outcome o = e.body(derive_seed(seed, i));
                r.statistic = o.statistic;
                r.threshold = o.threshold;
                r.pass = o.pass;
                r.detail = o.detail;
            } catch (const std::exception& ex) {
                r.pass = false;
                r.detail = std::string("exception: ") + ex.what();
            } catch (...) {
                r.pass = false;
                r.detail = "unknown exception";
            }
            r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            if (on_result) on_result(r);
            results.push_back(std::move(r));
        }
        return results;
    }

private:
    struct Entry {
        std::string name;
        std::string description;
        Body body;
    };
    std::vector<Entry> entries_;
};

inline std::string format_line(const TestResult& r) {
    std::ostringstream os;
    os << (r.pass ? "PASS" : "FAIL") << "  " << std::left << std::setw(28) << r.name << std::right
       << "  stat=" << std::setprecision(6) << r.statistic << "  threshold: " << r.threshold << "  (" << std::fixed
       << std::setprecision(1) << r.wall_seconds << " s)";
    return os.str();
}

inline void write_table(std::ostream& out, const SuiteResult& results) {
    std::size_t passed = 0;
    for (const auto& r : results) {
        out << format_line(r) << '\n';
        if (!r.detail.empty()) out << "      " << r.detail << '\n';
        passed += r.pass ? 1 : 0;
    }
    out << passed << "/" << results.size() << " passed\n";
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += ch;
        }
    }
    return out;
}

inline void write_junit(std::ostream& out, const SuiteResult& results, const std::string& suite_name) {
    std::size_t failures = 0;
    double total = 0.0;
    for (const auto& r : results) {
        failures += r.pass ? 0 : 1;
        total += r.wall_seconds;
    }
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<testsuite name=\"" << xml_escape(suite_name) << "\" tests=\"" << results.size() << "\" failures=\""
        << failures << "\" time=\"" << total << "\">\n";
    for (const auto& r : results) {
        out << "  <testcase name=\"" << xml_escape(r.name) << "\" classname=\"" << xml_escape(suite_name)
            << "\" time=\"" << r.wall_seconds << "\">\n";
        out << "    <system-out>statistic=" << r.statistic << " threshold=" << xml_escape(r.threshold) << " "
            << xml_escape(r.detail) << "</system-out>\n";
        if (!r.pass)
            out << "    <failure message=\"" << xml_escape(r.threshold) << "\">" << xml_escape(r.detail)
                << "</failure>\n";
        out << "  </testcase>\n";
    }
    out << "</testsuite>\n";
}

} // namespace snips::harness

#endif // SNIPS_HARNESS_HPP
