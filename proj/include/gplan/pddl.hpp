#pragma once

// Reader and writer for the PDDL fragment :strips + :negative-preconditions
// + :equality. Identifiers are case-insensitive and normalized to lower case.

#include "gplan/strips.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gplan::pddl {

enum class Severity { Error, Warning };

struct Diagnostic {
    int line = 0;
    int col = 0;
    Severity severity = Severity::Error;
    std::string message;

    // "file:line:col: severity: message"
    [[nodiscard]] std::string format(std::string_view file) const;
};

// Carries every diagnostic of a failed parse; what() is the formatted list.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string file, std::vector<Diagnostic> diagnostics);
    [[nodiscard]] const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

private:
    std::vector<Diagnostic> diagnostics_;
};

struct DomainResult {
    std::optional<Domain> domain;  // empty iff some diagnostic is an error
    std::vector<Diagnostic> diagnostics;
};

struct ProblemResult {
    std::optional<Instance> instance;
    std::vector<Diagnostic> diagnostics;
};

// `static_override` replaces the computed set of static predicates.
DomainResult parse_domain(std::string_view text, std::optional<std::set<std::string>> static_override = std::nullopt);
ProblemResult parse_problem(std::string_view text, std::shared_ptr<const Domain> domain);

std::string print_domain(const Domain& domain);
std::string print_problem(const Instance& instance);

// File helpers; throw ParseError (or std::runtime_error on IO failure).
std::shared_ptr<const Domain> load_domain(const std::filesystem::path& path);
Instance load_problem(const std::filesystem::path& path, std::shared_ptr<const Domain> domain);

// Plans: one "(action arg ...)" per line; blank lines and ";" comments skipped.
std::string print_plan(const Instance& instance, std::span<const GroundAction> actions, std::span<const std::size_t> plan);
std::vector<std::size_t> parse_plan(std::string_view text, const Instance& instance, std::span<const GroundAction> actions);

}  // namespace gplan::pddl
