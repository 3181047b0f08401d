#pragma once
#include <stdexcept>
#include <string>

namespace pmt {

// Failure taxonomy, mirrored by the CLI exit codes:
//   2  caller broke the contract (bad arguments, schema violations, resource caps)
//   3  a numerical process failed (rank collapse, eigensolver trouble)
//   4  I/O
class error : public std::runtime_error {
public:
    error(const std::string& msg, int code) : std::runtime_error(msg), code_(code) {}
    int exit_code() const noexcept { return code_; }

private:
    int code_;
};

struct contract_error : error {
    explicit contract_error(const std::string& m) : error(m, 2) {}
};
struct domain_error : error {
    explicit domain_error(const std::string& m) : error(m, 2) {}
};
struct resource_error : error {
    explicit resource_error(const std::string& m) : error(m, 2) {}
};
struct numeric_error : error {
    explicit numeric_error(const std::string& m) : error(m, 3) {}
};
struct io_error : error {
    explicit io_error(const std::string& m) : error(m, 4) {}
};

} // namespace pmt
