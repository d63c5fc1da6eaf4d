#pragma once

#include <istream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace serc {

struct Triple {
  std::string subject;
  std::string predicate;
  std::string object;

  bool operator==(const Triple&) const = default;
};

struct Dependency {
  std::string subject;
  std::string root_predicate;
  std::string dependent_predicate;
};

class KbParseError : public std::runtime_error {
 public:
  KbParseError(int line, const std::string& message, const std::string& source = {})
      : std::runtime_error((source.empty() ? std::string{} : source + ": ") + "line " +
                           std::to_string(line) + ": " + message),
        line_(line),
        message_(message) {}
  int line() const { return line_; }
  const std::string& message() const { return message_; }

 private:
  int line_;
  std::string message_;
};

/// Ground-truth triple store. Lookups are case- and whitespace-insensitive;
/// stored strings keep their original spelling. Read-only after load.
///
/// File format (UTF-8, one record per line, '#' starts a comment):
///   T <subject> | <predicate> | <object>
///   D <subject> | <root predicate> -> <dependent predicate>
///   X <predicate> | <wrong value>
class KnowledgeBase {
 public:
  static KnowledgeBase parse(std::istream& in);
  static KnowledgeBase parse_string(std::string_view text);
  static KnowledgeBase load(const std::string& path);

  void add_triple(Triple t);
  void add_distractor(std::string predicate, std::string value);
  /// Throws std::invalid_argument when the edge names unknown predicates or closes a cycle.
  void add_dependency(Dependency d);

  bool has_entity(std::string_view name) const;
  /// Canonical spelling of an entity, or empty when unknown.
  std::string entity_name(std::string_view name) const;
  const std::vector<std::string>& entities() const { return entity_order_; }

  std::vector<Triple> attributes(std::string_view subject) const;
  std::vector<std::string> values(std::string_view subject, std::string_view predicate) const;
  bool has_predicate(std::string_view subject, std::string_view predicate) const;
  bool contains(const Triple& t) const;

  /// Dependent predicates of (subject, root), 1 hop.
  std::vector<std::string> dependents(std::string_view subject, std::string_view root) const;
  const std::vector<Dependency>& dependencies() const { return dependencies_; }

  const std::vector<std::string>& distractors(std::string_view predicate) const;
  /// Every predicate named by a triple, dependency, or distractor record, sorted.
  std::vector<std::string> predicate_vocabulary() const;

  const std::vector<Triple>& triples() const { return triples_; }

 private:
  bool reaches(const std::string& subject, const std::string& from, const std::string& to) const;

  std::vector<Triple> triples_;
  std::vector<std::string> entity_order_;
  std::map<std::string, std::string> entity_key_;                 // normalized -> spelling
  std::map<std::string, std::vector<std::size_t>> by_subject_;    // normalized subject
  std::map<std::string, std::vector<std::string>> distractors_;   // normalized predicate
  std::vector<Dependency> dependencies_;
  std::set<std::string> extra_predicates_;
};

}  // namespace serc
