#ifndef POISSHEAF_REPORT_HPP
#define POISSHEAF_REPORT_HPP

#include <sstream>
#include <string>
#include <vector>

namespace poissheaf {

struct Finding {
    std::string check;
    std::string subject;
    std::string verdict;  // PASS | FAIL | WARN
    std::string detail;
};

/// Ordered findings with deterministic rendering. Overall status is FAIL iff
/// any finding is FAIL.
struct Report {
    std::vector<Finding> findings;

    void pass(std::string check, std::string subject, std::string detail = {}) {
        findings.push_back({std::move(check), std::move(subject), "PASS", std::move(detail)});
    }
    void fail(std::string check, std::string subject, std::string detail = {}) {
        findings.push_back({std::move(check), std::move(subject), "FAIL", std::move(detail)});
    }
    void warn(std::string check, std::string subject, std::string detail = {}) {
        findings.push_back({std::move(check), std::move(subject), "WARN", std::move(detail)});
    }

    void merge(const Report& other) {
        findings.insert(findings.end(), other.findings.begin(), other.findings.end());
    }

    int fail_count() const {
        int n = 0;
        for (const auto& f : findings)
            if (f.verdict == "FAIL") ++n;
        return n;
    }
    int pass_count() const {
        int n = 0;
        for (const auto& f : findings)
            if (f.verdict == "PASS") ++n;
        return n;
    }
    bool all_pass() const { return fail_count() == 0; }

    std::string render_text() const {
        std::ostringstream os;
        for (const auto& f : findings) {
            os << "CHECK " << f.check << ' ' << f.verdict << ' ' << f.subject;
            if (!f.detail.empty()) os << " :: " << f.detail;
            os << '\n';
        }
        os << "SUMMARY pass=" << pass_count() << " fail=" << fail_count()
           << " status=" << (all_pass() ? "PASS" : "FAIL") << '\n';
        return os.str();
    }
};

}  // namespace poissheaf

#endif
