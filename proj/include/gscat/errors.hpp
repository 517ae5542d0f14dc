#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace gscat {

// Every error raised by the library derives from gscat::error so callers (the
// CLI in particular) can map categories to exit codes.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class invalid_argument : public error {
public:
    using error::error;
};

class not_a_frame : public error {
public:
    using error::error;
};

class precondition_violation : public error {
public:
    using error::error;
};

class resource_limit : public error {
public:
    resource_limit(std::string what, std::size_t layer)
        : error(std::move(what)), layer_(layer) {}
    std::size_t layer() const noexcept { return layer_; }

private:
    std::size_t layer_;
};

// Raised when an iterative estimate hits its cap; the partial estimates are kept.
class numerical_failure : public error {
public:
    numerical_failure(std::string what, double lower, double upper)
        : error(std::move(what)), lower_(lower), upper_(upper) {}
    double lower_estimate() const noexcept { return lower_; }
    double upper_estimate() const noexcept { return upper_; }

private:
    double lower_;
    double upper_;
};

class format_error : public error {
public:
    using error::error;
};

class io_error : public error {
public:
    io_error(const std::string& what, std::string path)
        : error(what + ": " + path), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

} // namespace gscat
