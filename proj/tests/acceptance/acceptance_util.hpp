#pragma once

#include <cstdio>
#include <string>

// One pass/fail line per criterion; the process exit code is the number
// of failed criteria.
class Checker {
public:
    void check(const std::string& name, bool ok, const std::string& detail = "") {
        if (ok) {
            std::printf("PASS: %s%s%s\n", name.c_str(), detail.empty() ? "" : " — ",
                        detail.c_str());
        } else {
            ++failures_;
            std::printf("FAIL: %s%s%s\n", name.c_str(), detail.empty() ? "" : " — ",
                        detail.c_str());
        }
        std::fflush(stdout);
    }

    int exit_code() const { return failures_; }

private:
    int failures_ = 0;
};
