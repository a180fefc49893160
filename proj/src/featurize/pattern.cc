// SPDX-License-Identifier: Apache-2.0

#include "toxbench/featurize/pattern.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <set>

#include "featurize/embedded_data.h"
#include "toxbench/chem/element.h"
#include "toxbench/util/hash.h"

namespace toxbench::featurize {

PatternError::PatternError(std::size_t position, const std::string &message)
    : std::runtime_error("pattern error at " + std::to_string(position) + ": " + message),
      position_(position) { }

bool AtomPrimitive::matches(const chem::Molecule &mol, int atom) const {
  const chem::Atom &a = mol.atoms()[atom];
  bool result = false;
  switch (kind) {
  case Kind::kAny: result = true; break;
  case Kind::kAromatic: result = a.aromatic; break;
  case Kind::kAliphatic: result = !a.aromatic; break;
  case Kind::kAtomicNumber:
    result = a.atomic_number == value && (!aromatic || *aromatic == a.aromatic);
    break;
  case Kind::kRing: result = value == 0 ? !a.in_ring : a.in_ring; break;
  case Kind::kCharge: result = a.formal_charge == value; break;
  case Kind::kHCount: result = mol.total_h(atom) == value; break;
  case Kind::kDegree: result = a.degree == value; break;
  case Kind::kConnectivity: result = a.degree + mol.total_h(atom) == value; break;
  }
  return negate ? !result : result;
}

bool AtomQuery::matches(const chem::Molecule &mol, int atom) const {
  for (const auto &conj: alternatives) {
    bool all = true;
    for (const auto &p: conj) {
      if (!p.matches(mol, atom)) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

bool BondQuery::matches(const chem::Molecule &mol, int bond) const {
  const chem::Bond &b = mol.bonds()[bond];
  if (ring && *ring != b.in_ring) return false;
  switch (order) {
  case Order::kDefault:
    return b.order == chem::BondOrder::kSingle || b.order == chem::BondOrder::kAromatic;
  case Order::kAny: return true;
  case Order::kSingle: return b.order == chem::BondOrder::kSingle;
  case Order::kDouble: return b.order == chem::BondOrder::kDouble;
  case Order::kTriple: return b.order == chem::BondOrder::kTriple;
  case Order::kAromatic: return b.order == chem::BondOrder::kAromatic;
  }
  return false;
}

namespace {

class PatternParser {
public:
  explicit PatternParser(std::string_view text): s_(text) { }

  void parse(std::vector<AtomQuery> &atoms, std::vector<PatternBond> &bonds) {
    int prev = -1;
    std::optional<BondQuery> pending;
    std::vector<int> branches;
    std::map<int, std::pair<int, std::optional<BondQuery>>> rings;

    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (c == '(') {
        if (prev < 0 || pending) fail("misplaced '('");
        branches.push_back(prev);
        ++pos_;
      } else if (c == ')') {
        if (branches.empty()) fail("unmatched ')'");
        if (pending) fail("dangling bond");
        prev = branches.back();
        branches.pop_back();
        ++pos_;
      } else if (c == '-' || c == '=' || c == '#' || c == ':' || c == '~' || c == '@' || c == '!') {
        if (prev < 0 || pending) fail("misplaced bond");
        pending = read_bond();
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
        if (prev < 0) fail("ring digit without an atom");
        int number;
        if (c == '%') {
          if (pos_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])) ||
              !std::isdigit(static_cast<unsigned char>(s_[pos_ + 2])))
            fail("'%' needs two digits");
          number = (s_[pos_ + 1] - '0') * 10 + (s_[pos_ + 2] - '0');
          pos_ += 3;
        } else {
          number = c - '0';
          ++pos_;
        }
        auto it = rings.find(number);
        if (it == rings.end()) {
          rings.emplace(number, std::make_pair(prev, pending));
        } else {
          if (it->second.first == prev) fail("ring closes on its own atom");
          BondQuery q = pending ? *pending : (it->second.second ? *it->second.second : BondQuery{});
          bonds.push_back({it->second.first, prev, q});
          rings.erase(it);
        }
        pending.reset();
      } else if (c == '.') {
        fail("disconnected patterns are not supported");
      } else {
        atoms.push_back(read_atom());
        int idx = static_cast<int>(atoms.size()) - 1;
        if (prev >= 0) bonds.push_back({prev, idx, pending ? *pending : BondQuery{}});
        pending.reset();
        prev = idx;
      }
    }
    if (pending) fail("dangling bond");
    if (!branches.empty()) fail("unclosed '('");
    if (!rings.empty()) fail("unclosed ring digit");
    if (atoms.empty()) fail("empty pattern");
  }

private:
  [[noreturn]] void fail(const std::string &msg) const { throw PatternError(pos_, msg); }

  char peek(std::size_t k = 0) const { return pos_ + k < s_.size() ? s_[pos_ + k] : '\0'; }

  BondQuery read_bond() {
    BondQuery q;
    q.order = BondQuery::Order::kAny;
    bool any_order = false;
    bool saw = false;
    while (true) {
      char c = peek();
      auto set_order = [&](BondQuery::Order o) {
        if (any_order && q.order != o) fail("conflicting bond orders");
        q.order = o;
        any_order = true;
      };
      if (c == '-') set_order(BondQuery::Order::kSingle);
      else if (c == '=') set_order(BondQuery::Order::kDouble);
      else if (c == '#') set_order(BondQuery::Order::kTriple);
      else if (c == ':') set_order(BondQuery::Order::kAromatic);
      else if (c == '~') { }
      else if (c == '@') q.ring = true;
      else if (c == '!' && peek(1) == '@') {
        q.ring = false;
        ++pos_;
      } else break;
      saw = true;
      ++pos_;
    }
    if (!saw) fail("bad bond");
    return q;
  }

  static AtomPrimitive element_primitive(int z, std::optional<bool> aromatic) {
    AtomPrimitive p;
    p.kind = AtomPrimitive::Kind::kAtomicNumber;
    p.value = z;
    p.aromatic = aromatic;
    return p;
  }

  AtomQuery read_atom() {
    char c = peek();
    AtomQuery q;
    if (c == '[') {
      ++pos_;
      q = read_expr();
      if (peek() != ']') fail("expected ']'");
      ++pos_;
      return q;
    }
    AtomPrimitive p;
    if (c == '*') {
      ++pos_;
    } else if (c == 'a') {
      p.kind = AtomPrimitive::Kind::kAromatic;
      ++pos_;
    } else if (c == 'A') {
      p.kind = AtomPrimitive::Kind::kAliphatic;
      ++pos_;
    } else if (c == 'C' && peek(1) == 'l') {
      p = element_primitive(17, false);
      pos_ += 2;
    } else if (c == 'B' && peek(1) == 'r') {
      p = element_primitive(35, false);
      pos_ += 2;
    } else if (std::string_view("BCNOPSFI").find(c) != std::string_view::npos && c != '\0') {
      p = element_primitive(chem::find_element(std::string(1, c))->atomic_number, false);
      ++pos_;
    } else if (std::string_view("bcnops").find(c) != std::string_view::npos && c != '\0') {
      p = element_primitive(
          chem::find_element(std::string(1, static_cast<char>(std::toupper(c))))->atomic_number, true);
      ++pos_;
    } else {
      fail(std::string("unexpected '") + c + "'");
    }
    q.alternatives.push_back({p});
    return q;
  }

  AtomQuery read_expr() {
    AtomQuery q;
    q.alternatives.push_back(read_term());
    while (peek() == ',') {
      ++pos_;
      q.alternatives.push_back(read_term());
    }
    return q;
  }

  std::vector<AtomPrimitive> read_term() {
    std::vector<AtomPrimitive> conj;
    conj.push_back(read_factor());
    while (true) {
      char c = peek();
      if (c == '&') {
        ++pos_;
        conj.push_back(read_factor());
      } else if (c != ']' && c != ',' && c != '\0') {
        conj.push_back(read_factor());
      } else {
        break;
      }
    }
    return conj;
  }

  std::optional<int> read_number() {
    std::size_t start = pos_;
    while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (start == pos_) return std::nullopt;
    if (pos_ - start > 3) fail("number too long");
    int v = 0;
    std::from_chars(s_.data() + start, s_.data() + pos_, v);
    return v;
  }

  AtomPrimitive read_factor() {
    bool negate = false;
    while (peek() == '!') {
      negate = !negate;
      ++pos_;
    }
    AtomPrimitive p = read_primitive();
    p.negate = negate;
    return p;
  }

  AtomPrimitive read_primitive() {
    char c = peek();
    AtomPrimitive p;
    using K = AtomPrimitive::Kind;
    if (c == '#') {
      ++pos_;
      auto n = read_number();
      if (!n) fail("'#' needs an atomic number");
      return element_primitive(*n, std::nullopt);
    }
    if (c == '*') {
      ++pos_;
      return p;
    }
    if (c == '+' || c == '-') {
      ++pos_;
      int sign = c == '+' ? 1 : -1;
      int mag = 1;
      if (auto n = read_number()) {
        mag = *n;
      } else {
        while (peek() == c) {
          ++mag;
          ++pos_;
        }
      }
      p.kind = K::kCharge;
      p.value = sign * mag;
      return p;
    }
    if (std::isupper(static_cast<unsigned char>(c))) {
      char next = peek(1);
      if (std::islower(static_cast<unsigned char>(next))) {
        if (const auto *e = chem::find_element(std::string{c, next})) {
          pos_ += 2;
          return element_primitive(e->atomic_number, false);
        }
      }
      if (c == 'R' || c == 'D' || c == 'X' || c == 'H') {
        ++pos_;
        auto n = read_number();
        p.kind = c == 'R' ? K::kRing : c == 'D' ? K::kDegree : c == 'X' ? K::kConnectivity : K::kHCount;
        p.value = n ? *n : (c == 'R' ? -1 : 1);
        return p;
      }
      if (c == 'A') {
        ++pos_;
        p.kind = K::kAliphatic;
        return p;
      }
      if (const auto *e = chem::find_element(std::string(1, c))) {
        ++pos_;
        return element_primitive(e->atomic_number, false);
      }
      fail(std::string("unknown primitive '") + c + "'");
    }
    if (std::islower(static_cast<unsigned char>(c))) {
      for (std::string_view sym: {"se", "as", "b", "c", "n", "o", "p", "s"}) {
        if (s_.substr(pos_, sym.size()) == sym) {
          std::string upper(sym);
          upper[0] = static_cast<char>(std::toupper(upper[0]));
          pos_ += sym.size();
          return element_primitive(chem::find_element(upper)->atomic_number, true);
        }
      }
      if (c == 'a') {
        ++pos_;
        p.kind = K::kAromatic;
        return p;
      }
    }
    fail(std::string("unexpected '") + (c ? std::string(1, c) : std::string("end")) + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

Pattern Pattern::compile(std::string_view text) {
  Pattern p;
  p.text_ = std::string(text);
  PatternParser(text).parse(p.atoms_, p.bonds_);

  const std::size_t n = p.atoms_.size();
  std::vector<std::vector<int>> adj(n);
  for (const auto &b: p.bonds_) {
    adj[b.a].push_back(b.b);
    adj[b.b].push_back(b.a);
  }
  std::vector<bool> seen(n, false);
  p.order_.push_back(0);
  seen[0] = true;
  for (std::size_t head = 0; head < p.order_.size(); ++head)
    for (int nb: adj[p.order_[head]])
      if (!seen[nb]) {
        seen[nb] = true;
        p.order_.push_back(nb);
      }
  if (p.order_.size() != n) throw PatternError(0, "pattern is not connected");
  return p;
}

namespace {

struct MatchState {
  const Pattern &pattern;
  const chem::Molecule &mol;
  // For search position k: parent position (-1 for k = 0) and pattern bonds
  // (bond index, earlier position) to check.
  std::vector<int> parent;
  std::vector<std::vector<std::pair<int, int>>> back_bonds;
  std::vector<int> mapped;  // by search position
  std::vector<bool> used;
  std::set<std::vector<int>> found;

  MatchState(const Pattern &p, const chem::Molecule &m)
      : pattern(p), mol(m), parent(p.atom_count(), -1), back_bonds(p.atom_count()),
        mapped(p.atom_count(), -1), used(m.atom_count(), false) {
    const auto &order = p.search_order();
    std::vector<int> pos_of(p.atom_count());
    for (std::size_t k = 0; k < order.size(); ++k) pos_of[order[k]] = static_cast<int>(k);
    for (std::size_t bi = 0; bi < p.bonds().size(); ++bi) {
      int pa = pos_of[p.bonds()[bi].a], pb = pos_of[p.bonds()[bi].b];
      int later = std::max(pa, pb), earlier = std::min(pa, pb);
      back_bonds[later].emplace_back(static_cast<int>(bi), earlier);
      if (parent[later] < 0 || earlier < parent[later]) parent[later] = earlier;
    }
  }

  bool feasible(std::size_t k, int atom) const {
    if (used[atom]) return false;
    if (!pattern.atoms()[pattern.search_order()[k]].matches(mol, atom)) return false;
    for (auto [bi, earlier]: back_bonds[k]) {
      int mb = mol.find_bond(atom, mapped[earlier]);
      if (mb < 0 || !pattern.bonds()[bi].query.matches(mol, mb)) return false;
    }
    return true;
  }

  void extend(std::size_t k) {
    if (k == mapped.size()) {
      std::vector<int> atoms(mapped);
      std::sort(atoms.begin(), atoms.end());
      found.insert(std::move(atoms));
      return;
    }
    auto try_atom = [&](int atom) {
      if (!feasible(k, atom)) return;
      mapped[k] = atom;
      used[atom] = true;
      extend(k + 1);
      used[atom] = false;
      mapped[k] = -1;
    };
    if (k == 0) {
      for (std::size_t a = 0; a < mol.atom_count(); ++a) try_atom(static_cast<int>(a));
    } else {
      for (const auto &nb: mol.neighbors(mapped[parent[k]])) try_atom(nb.atom);
    }
  }
};

}  // namespace

std::size_t count_matches(const Pattern &pattern, const chem::Molecule &mol) {
  if (mol.atom_count() < pattern.atom_count()) return 0;
  MatchState state(pattern, mol);
  state.extend(0);
  return state.found.size();
}

PatternSet PatternSet::parse(std::string name, std::string_view text, std::size_t arity, bool binary) {
  PatternSet set;
  set.name = std::move(name);
  set.arity = arity;
  set.binary = binary;
  set.content_hash = to_hex(fnv1a(text));

  std::set<std::size_t> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    auto where = [&](const std::string &msg) {
      return PatternError(0, set.name + " line " + std::to_string(line_no) + ": " + msg);
    };
    auto t1 = line.find('\t');
    auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos) throw where("expected index<TAB>pattern<TAB>label");
    std::string_view idx_text = line.substr(0, t1);
    std::size_t index = 0;
    auto [ptr, ec] = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), index);
    if (ec != std::errc() || ptr != idx_text.data() + idx_text.size()) throw where("bad index");
    if (index >= arity) throw where("index beyond arity " + std::to_string(arity));
    if (!seen.insert(index).second) throw where("duplicate index " + std::to_string(index));
    std::string_view pattern_text = line.substr(t1 + 1, t2 - t1 - 1);
    try {
      set.entries.push_back({index, Pattern::compile(pattern_text), std::string(line.substr(t2 + 1))});
    } catch (const PatternError &e) {
      throw where(std::string("'") + std::string(pattern_text) + "': " + e.what());
    }
  }
  std::sort(set.entries.begin(), set.entries.end(),
            [](const PatternEntry &x, const PatternEntry &y) { return x.index < y.index; });
  return set;
}

const PatternSet &structural_keys() {
  static const PatternSet set = PatternSet::parse("structural_keys", embedded::k_structural_keys_tsv, 166, true);
  return set;
}

const PatternSet &toxicity_patterns() {
  static const PatternSet set =
      PatternSet::parse("toxicity_patterns", embedded::k_toxicity_patterns_tsv, 827, false);
  return set;
}

std::vector<double> match_patterns(const chem::Molecule &mol, const PatternSet &set) {
  std::vector<double> out(set.arity, 0.0);
  for (const auto &entry: set.entries) {
    auto n = count_matches(entry.pattern, mol);
    out[entry.index] = set.binary ? (n > 0 ? 1.0 : 0.0) : static_cast<double>(n);
  }
  return out;
}

}  // namespace toxbench::featurize
