#ifndef QAC_QUESTION_HPP_
#define QAC_QUESTION_HPP_

#include <algorithm>
#include <array>
#include <cctype>
#include <compare>
#include <fstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qac/errors.hpp"
#include "qac/scene.hpp"

namespace qac {

// Axes: left/right compare x, front/behind compare y with front = smaller y.
enum class Relation : std::uint8_t { kLeftOf, kRightOf, kInFrontOf, kBehind };

inline constexpr int kNumRelations = 4;
inline constexpr std::array<std::string_view, kNumRelations> kRelationNames = {
    "left of", "right of", "in front of", "behind"};

inline std::string_view to_string(Relation r) {
  return kRelationNames[static_cast<int>(r)];
}

inline Relation converse(Relation r) {
  switch (r) {
    case Relation::kLeftOf: return Relation::kRightOf;
    case Relation::kRightOf: return Relation::kLeftOf;
    case Relation::kInFrontOf: return Relation::kBehind;
    case Relation::kBehind: return Relation::kInFrontOf;
  }
  return r;
}

struct ObjectRef {
  Color color = Color::kCyan;
  Material material = Material::kRubber;

  friend auto operator<=>(const ObjectRef&, const ObjectRef&) = default;
};

// "subject <relation> object", e.g. "green left of red".
struct RelationAtom {
  ObjectRef subject;
  ObjectRef object;
  Relation relation = Relation::kLeftOf;

  friend auto operator<=>(const RelationAtom&, const RelationAtom&) = default;
};

// An h-hop question: h atoms chained so that atom i's object is atom i+1's
// subject, over h+1 distinct colors. The answer is the conjunction.
struct QuestionAST {
  int hops = 1;
  std::vector<RelationAtom> atoms;

  friend auto operator<=>(const QuestionAST&, const QuestionAST&) = default;
};

std::string render_question(const QuestionAST& q);

// Chain shape and color distinctness.
inline bool is_well_formed(const QuestionAST& q) {
  if (q.hops < 1 || q.hops > 3) return false;
  if (static_cast<int>(q.atoms.size()) != q.hops) return false;
  std::array<bool, kNumObjects> used{};
  auto take = [&](Color c) {
    const int i = static_cast<int>(c);
    if (used[i]) return false;
    used[i] = true;
    return true;
  };
  if (!take(q.atoms[0].subject.color)) return false;
  for (std::size_t i = 0; i < q.atoms.size(); ++i) {
    if (i + 1 < q.atoms.size() && q.atoms[i].object != q.atoms[i + 1].subject)
      return false;
    if (!take(q.atoms[i].object.color)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Evaluation

inline bool relation_holds(const Scene& scene, Color subject, Color object,
                           Relation relation, double margin = 0.0) {
  const Vec2& a = scene.object(subject).position;
  const Vec2& b = scene.object(object).position;
  switch (relation) {
    case Relation::kLeftOf: return a.x < b.x - margin;
    case Relation::kRightOf: return a.x > b.x + margin;
    case Relation::kInFrontOf: return a.y < b.y - margin;
    case Relation::kBehind: return a.y > b.y + margin;
  }
  return false;
}

// A reference resolves when the object of that color has that material.
inline bool resolves(const Scene& scene, const ObjectRef& ref) {
  return scene.object(ref.color).material == ref.material;
}

// Ground-truth labeling function. Total: unresolvable references give false.
inline bool answer(const Scene& scene, const QuestionAST& q,
                   double margin = 0.0) {
  for (const auto& atom : q.atoms) {
    if (!resolves(scene, atom.subject) || !resolves(scene, atom.object))
      return false;
    if (!relation_holds(scene, atom.subject.color, atom.object.color,
                        atom.relation, margin))
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Enumeration

namespace detail {

inline std::vector<QuestionAST> build_questions(int hop) {
  std::vector<QuestionAST> out;
  std::array<int, 4> colors{};
  std::array<bool, kNumObjects> used{};
  const int num_colors = hop + 1;
  int relation_combos = 1;
  for (int i = 0; i < hop; ++i) relation_combos *= kNumRelations;

  auto emit = [&]() {
    for (int combo = 0; combo < relation_combos; ++combo) {
      QuestionAST q;
      q.hops = hop;
      int rest = combo;
      std::array<int, 3> rel{};
      for (int i = hop - 1; i >= 0; --i) {
        rel[i] = rest % kNumRelations;
        rest /= kNumRelations;
      }
      for (int i = 0; i < hop; ++i) {
        RelationAtom atom;
        atom.subject = {static_cast<Color>(colors[i]), Material::kRubber};
        atom.object = {static_cast<Color>(colors[i + 1]), Material::kRubber};
        atom.relation = static_cast<Relation>(rel[i]);
        q.atoms.push_back(atom);
      }
      out.push_back(std::move(q));
    }
  };

  auto recurse = [&](auto&& self, int depth) -> void {
    if (depth == num_colors) {
      emit();
      return;
    }
    for (int c = 0; c < kNumObjects; ++c) {
      if (used[c]) continue;
      used[c] = true;
      colors[depth] = c;
      self(self, depth + 1);
      used[c] = false;
    }
  };
  recurse(recurse, 0);
  return out;
}

}  // namespace detail

// Every chain over ordered tuples of h+1 distinct colors with one of four
// relations per atom: 80, 960 and 7680 questions for h = 1, 2, 3. Order is
// lexicographic in (color tuple, relation tuple). References use the default
// rubber material.
inline const std::vector<QuestionAST>& enumerate_questions(int hop) {
  if (hop < 1 || hop > 3)
    throw ContractError("hop must be 1, 2 or 3, got " + std::to_string(hop));
  static const std::array<std::vector<QuestionAST>, 3> kAll = {
      detail::build_questions(1), detail::build_questions(2),
      detail::build_questions(3)};
  return kAll[hop - 1];
}

inline std::size_t question_count(int hop) {
  return enumerate_questions(hop).size();
}

// Every enumerable question of the hop class paired with its answer.
inline std::vector<std::pair<QuestionAST, bool>> describe_scene(
    const Scene& scene, int hop, double margin = 0.0) {
  const auto& questions = enumerate_questions(hop);
  std::vector<std::pair<QuestionAST, bool>> out;
  out.reserve(questions.size());
  for (const auto& q : questions) out.emplace_back(q, answer(scene, q, margin));
  return out;
}

// ---------------------------------------------------------------------------
// Surface forms
//
//   1 hop: There is a <c1> <m1> sphere; are there any <m0> <c0> balls <r1> it?
//   2 hop: Are there any <m0> <c0> balls that are <r1> the <c1> <m1> sphere
//          that is <r2> the <c2> <m2> ball?
//   3 hop: Are there any <m0> <c0> balls that are <r1> the <c1> <m1> sphere
//          that is <r2> the <c2> <m2> sphere that is <r3> the <c3> <m3> ball?
//
// where atom i reads "<c(i-1)> <r(i)> <c(i)>".

inline std::string render_question(const QuestionAST& q) {
  if (!is_well_formed(q)) throw ContractError("malformed question AST");
  auto word = [](auto v) { return std::string(to_string(v)); };
  const auto& first = q.atoms.front();
  if (q.hops == 1) {
    return "There is a " + word(first.object.color) + " " +
           word(first.object.material) + " sphere; are there any " +
           word(first.subject.material) + " " + word(first.subject.color) +
           " balls " + word(first.relation) + " it?";
  }
  std::string out = "Are there any " + word(first.subject.material) + " " +
                    word(first.subject.color) + " balls that are ";
  for (std::size_t i = 0; i < q.atoms.size(); ++i) {
    const auto& atom = q.atoms[i];
    if (i > 0) out += " that is ";
    out += word(atom.relation) + " the " + word(atom.object.color) + " " +
           word(atom.object.material);
    out += (i + 1 == q.atoms.size()) ? " ball?" : " sphere";
  }
  return out;
}

namespace detail {

struct Token {
  std::string text;  // lower-cased
  std::size_t pos;
};

// Collapses whitespace and splits off ';' and '?'. Positions index the
// normalized string.
inline std::vector<Token> tokenize_question(std::string_view raw,
                                            std::size_t* normalized_length) {
  std::vector<Token> tokens;
  std::size_t npos = 0;
  std::string current;
  std::size_t current_pos = 0;
  bool pending_space = false;
  auto flush = [&]() {
    if (!current.empty()) tokens.push_back({current, current_pos});
    current.clear();
  };
  for (char ch : raw) {
    const auto uch = static_cast<unsigned char>(ch);
    if (std::isspace(uch)) {
      flush();
      pending_space = npos > 0;
      continue;
    }
    if (pending_space) {
      ++npos;
      pending_space = false;
    }
    if (ch == ';' || ch == '?') {
      flush();
      tokens.push_back({std::string(1, ch), npos});
    } else {
      if (current.empty()) current_pos = npos;
      current.push_back(static_cast<char>(std::tolower(uch)));
    }
    ++npos;
  }
  flush();
  *normalized_length = npos;
  return tokens;
}

class QuestionParser {
 public:
  explicit QuestionParser(std::string_view text) {
    tokens_ = tokenize_question(text, &length_);
  }

  QuestionAST parse() {
    if (peek_is("there")) return parse_one_hop();
    if (peek_is("are")) return parse_chain();
    fail("expected 'There' or 'Are'");
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what, position());
  }
  std::size_t position() const {
    return at_ < tokens_.size() ? tokens_[at_].pos : length_;
  }
  bool peek_is(std::string_view word) const {
    return at_ < tokens_.size() && tokens_[at_].text == word;
  }
  void expect(std::string_view words) {
    std::size_t start = 0;
    while (start < words.size()) {
      std::size_t end = words.find(' ', start);
      if (end == std::string_view::npos) end = words.size();
      const auto word = words.substr(start, end - start);
      if (!peek_is(word)) fail("expected '" + std::string(word) + "'");
      ++at_;
      start = end + 1;
    }
  }
  const Token& next_word(const char* what) {
    if (at_ >= tokens_.size()) fail(std::string("expected ") + what);
    return tokens_[at_++];
  }
  Color color() {
    const auto& tok = next_word("a color");
    if (auto c = color_from_string(tok.text)) return *c;
    throw LexicalError("unknown color '" + tok.text + "'", tok.pos);
  }
  Material material() {
    const auto& tok = next_word("a material");
    if (auto m = material_from_string(tok.text)) return *m;
    throw LexicalError("unknown material '" + tok.text + "'", tok.pos);
  }
  Relation relation() {
    const std::size_t pos = position();
    for (int r = 0; r < kNumRelations; ++r) {
      const std::size_t save = at_;
      std::string_view words = kRelationNames[r];
      bool ok = true;
      std::size_t start = 0;
      while (start < words.size()) {
        std::size_t end = words.find(' ', start);
        if (end == std::string_view::npos) end = words.size();
        if (!peek_is(words.substr(start, end - start))) {
          ok = false;
          break;
        }
        ++at_;
        start = end + 1;
      }
      if (ok) return static_cast<Relation>(r);
      at_ = save;
    }
    const std::string got = at_ < tokens_.size() ? tokens_[at_].text : "";
    throw LexicalError("unknown relation '" + got + "'", pos);
  }
  void finish() {
    if (at_ != tokens_.size()) fail("trailing text");
  }

  QuestionAST parse_one_hop() {
    expect("there is a");
    ObjectRef object;
    object.color = color();
    object.material = material();
    expect("sphere ; are there any");
    ObjectRef subject;
    subject.material = material();
    subject.color = color();
    expect("balls");
    const Relation rel = relation();
    expect("it ?");
    finish();
    QuestionAST q;
    q.hops = 1;
    q.atoms.push_back({subject, object, rel});
    return checked(q);
  }

  QuestionAST parse_chain() {
    expect("are there any");
    ObjectRef subject;
    subject.material = material();
    subject.color = color();
    expect("balls that are");
    QuestionAST q;
    while (true) {
      const Relation rel = relation();
      expect("the");
      ObjectRef object;
      object.color = color();
      object.material = material();
      q.atoms.push_back({subject, object, rel});
      subject = object;
      if (peek_is("ball")) {
        expect("ball ?");
        break;
      }
      expect("sphere that is");
    }
    finish();
    q.hops = static_cast<int>(q.atoms.size());
    if (q.hops < 2 || q.hops > 3)
      throw ParseError("chained form needs 2 or 3 relations", 0);
    return checked(q);
  }

  QuestionAST checked(const QuestionAST& q) const {
    if (!is_well_formed(q))
      throw ParseError("question repeats a color", 0);
    return q;
  }

  std::vector<Token> tokens_;
  std::size_t length_ = 0;
  std::size_t at_ = 0;
};

}  // namespace detail

inline QuestionAST parse_question(std::string_view text) {
  return detail::QuestionParser(text).parse();
}

// One canonical question per line; blank lines are skipped.
inline std::vector<QuestionAST> read_question_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open question file " + path);
  std::vector<QuestionAST> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_question(line));
    } catch (const ParseError& e) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline void write_question_file(const std::string& path,
                                const std::vector<QuestionAST>& questions) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write question file " + path);
  for (const auto& q : questions) out << render_question(q) << '\n';
}

}  // namespace qac

#endif  // QAC_QUESTION_HPP_
