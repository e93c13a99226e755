#pragma once
#include <stdexcept>
#include <string>

namespace towerforge {

/* Error taxonomy, kept deliberately small.
 *
 * domain_error        malformed or unsupported inputs (bad discriminant, composite
 *                     where a prime is required, unsupported field degree, ...)
 * resource_error      an enumeration cap or size limit was exhausted
 * search_error        a bounded search ran out of room (carries scan statistics
 *                     in the message); distinct from resource_error so callers
 *                     can retry with a bigger bound
 * hypothesis_error    the input is well-formed but a mathematical precondition
 *                     fails (e.g. the base field cannot support the requested
 *                     elimination); maps to exit code 2 in the CLI
 * inconsistency_error an internal invariant that is guaranteed by theory was
 *                     violated; always a bug, never user error
 */

struct domain_error : std::runtime_error {
  explicit domain_error(const std::string& m) : std::runtime_error(m) {}
};

struct resource_error : std::runtime_error {
  explicit resource_error(const std::string& m) : std::runtime_error(m) {}
};

struct search_error : std::runtime_error {
  explicit search_error(const std::string& m) : std::runtime_error(m) {}
};

struct hypothesis_error : std::runtime_error {
  explicit hypothesis_error(const std::string& m) : std::runtime_error(m) {}
};

struct inconsistency_error : std::logic_error {
  explicit inconsistency_error(const std::string& m) : std::logic_error(m) {}
};

}  // namespace towerforge
