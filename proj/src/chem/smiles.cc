// SPDX-License-Identifier: Apache-2.0

#include "toxbench/chem/smiles.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <random>
#include <utility>

#include "toxbench/chem/element.h"

namespace toxbench::chem {

std::string_view to_string(ParseErrorKind kind) {
  switch (kind) {
  case ParseErrorKind::kUnbalancedParenthesis: return "unbalanced_parenthesis";
  case ParseErrorKind::kUnclosedRingBond: return "unclosed_ring_bond";
  case ParseErrorKind::kUnknownElement: return "unknown_element";
  case ParseErrorKind::kBadCharge: return "bad_charge";
  case ParseErrorKind::kValenceViolation: return "valence_violation";
  case ParseErrorKind::kEmptyInput: return "empty_input";
  case ParseErrorKind::kBadToken: return "bad_token";
  }
  return "unknown";
}

ParseError::ParseError(ParseErrorKind kind, std::size_t position, const std::string &message)
    : std::runtime_error(std::string(to_string(kind)) + " at " + std::to_string(position) + ": " +
                         message),
      kind_(kind), position_(position), detail_(message) { }

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

struct RingOpen {
  int atom;
  std::optional<BondOrder> order;
  bool stereo;
  std::size_t position;
};

struct PendingBond {
  BondOrder order;
  bool stereo;
  std::size_t position;
};

class SmilesParser {
public:
  SmilesParser(std::string_view full, std::size_t begin, std::size_t end)
      : full_(full), pos_(begin), end_(end) { }

  Molecule parse() {
    while (pos_ < end_) {
      char c = full_[pos_];
      if (c == '(') {
        open_branch();
      } else if (c == ')') {
        close_branch();
      } else if (c == '-' || c == '=' || c == '#' || c == ':' || c == '$' || c == '/' || c == '\\') {
        read_bond(c);
      } else if (c == '.') {
        if (prev_ < 0 || pending_)
          fail(ParseErrorKind::kBadToken, pos_, "'.' must separate two components");
        if (!branches_.empty())
          fail(ParseErrorKind::kBadToken, pos_, "'.' inside a branch is not supported");
        prev_ = -1;
        ++pos_;
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
        ring_bond();
      } else if (c == '[') {
        bracket_atom();
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '*') {
        organic_atom();
      } else {
        fail(ParseErrorKind::kBadToken, pos_,
             std::string("unexpected character '") + printable(c) + "'");
      }
    }
    if (pending_) fail(ParseErrorKind::kBadToken, pending_->position, "bond without a following atom");
    if (!branches_.empty())
      fail(ParseErrorKind::kUnbalancedParenthesis, branches_.back().second, "unclosed '('");
    if (!rings_.empty()) {
      const auto &[num, ring] = *rings_.begin();
      fail(ParseErrorKind::kUnclosedRingBond, ring.position,
           "ring bond " + std::to_string(num) + " is never closed");
    }
    if (atoms_.empty()) fail(ParseErrorKind::kEmptyInput, end_, "no atoms");
    if (prev_ < 0) fail(ParseErrorKind::kBadToken, end_ - 1, "trailing '.'");
    return Molecule::from_graph(std::move(atoms_), std::move(bonds_), std::string(full_), positions_);
  }

private:
  [[noreturn]] static void fail(ParseErrorKind kind, std::size_t position, const std::string &msg) {
    throw ParseError(kind, position, msg);
  }

  static std::string printable(char c) {
    if (std::isprint(static_cast<unsigned char>(c))) return std::string(1, c);
    char buf[8];
    std::snprintf(buf, sizeof buf, "\\x%02x", static_cast<unsigned char>(c));
    return buf;
  }

  char peek(std::size_t offset = 0) const {
    return pos_ + offset < end_ ? full_[pos_ + offset] : '\0';
  }

  void open_branch() {
    if (prev_ < 0) fail(ParseErrorKind::kBadToken, pos_, "branch without a preceding atom");
    if (pending_) fail(ParseErrorKind::kBadToken, pos_, "bond before '('");
    if (peek(1) == ')') fail(ParseErrorKind::kBadToken, pos_, "empty branch");
    branches_.emplace_back(prev_, pos_);
    ++pos_;
  }

  void close_branch() {
    if (branches_.empty()) fail(ParseErrorKind::kUnbalancedParenthesis, pos_, "unmatched ')'");
    if (pending_) fail(ParseErrorKind::kBadToken, pending_->position, "bond without a following atom");
    prev_ = branches_.back().first;
    branches_.pop_back();
    ++pos_;
  }

  void read_bond(char c) {
    if (prev_ < 0) fail(ParseErrorKind::kBadToken, pos_, "bond without a preceding atom");
    if (pending_) fail(ParseErrorKind::kBadToken, pos_, "consecutive bond symbols");
    BondOrder order = BondOrder::kSingle;
    bool stereo = false;
    switch (c) {
    case '=': order = BondOrder::kDouble; break;
    case '#': order = BondOrder::kTriple; break;
    case ':': order = BondOrder::kAromatic; break;
    case '$': fail(ParseErrorKind::kBadToken, pos_, "quadruple bonds are not supported");
    case '/':
    case '\\': stereo = true; break;
    default: break;
    }
    pending_ = PendingBond{order, stereo, pos_};
    ++pos_;
  }

  BondOrder default_order(int a, int b) const {
    return atoms_[a].aromatic && atoms_[b].aromatic ? BondOrder::kAromatic : BondOrder::kSingle;
  }

  void ring_bond() {
    std::size_t start = pos_;
    if (prev_ < 0) fail(ParseErrorKind::kBadToken, pos_, "ring bond without a preceding atom");
    int number;
    if (peek() == '%') {
      if (!std::isdigit(static_cast<unsigned char>(peek(1))) ||
          !std::isdigit(static_cast<unsigned char>(peek(2))))
        fail(ParseErrorKind::kBadToken, pos_, "'%' must be followed by two digits");
      number = (peek(1) - '0') * 10 + (peek(2) - '0');
      pos_ += 3;
    } else {
      number = peek() - '0';
      ++pos_;
    }

    auto it = rings_.find(number);
    if (it == rings_.end()) {
      rings_.emplace(number,
                     RingOpen{prev_, pending_ ? std::optional(pending_->order) : std::nullopt,
                              pending_ && pending_->stereo, start});
      pending_.reset();
      return;
    }

    RingOpen open = it->second;
    rings_.erase(it);
    std::optional<BondOrder> order = open.order;
    if (pending_) {
      if (order && *order != pending_->order && !(open.stereo || pending_->stereo))
        fail(ParseErrorKind::kBadToken, pending_->position, "conflicting ring bond orders");
      if (!order || open.stereo) order = pending_->order;
    }
    if (open.atom == prev_) fail(ParseErrorKind::kBadToken, start, "ring bond closes on its own atom");
    Bond bd;
    bd.a = open.atom;
    bd.b = prev_;
    bd.order = order ? *order : default_order(open.atom, prev_);
    bd.has_stereo = open.stereo || (pending_ && pending_->stereo);
    pending_.reset();
    bonds_.push_back(bd);
  }

  void add_atom(Atom atom, std::size_t position) {
    int idx = static_cast<int>(atoms_.size());
    atoms_.push_back(std::move(atom));
    positions_.push_back(position);
    if (prev_ >= 0) {
      Bond bd;
      bd.a = prev_;
      bd.b = idx;
      bd.order = pending_ ? pending_->order : default_order(prev_, idx);
      bd.has_stereo = pending_ && pending_->stereo;
      bonds_.push_back(bd);
    } else if (pending_) {
      fail(ParseErrorKind::kBadToken, pending_->position, "bond without a preceding atom");
    }
    pending_.reset();
    prev_ = idx;
  }

  void organic_atom() {
    std::size_t start = pos_;
    char c = peek();
    Atom atom;
    std::string symbol;
    if (c == '*') {
      symbol = "*";
    } else if (c == 'C' && peek(1) == 'l') {
      symbol = "Cl";
    } else if (c == 'B' && peek(1) == 'r') {
      symbol = "Br";
    } else if (std::string_view("BCNOPSFI").find(c) != std::string_view::npos) {
      symbol = std::string(1, c);
    } else if (std::string_view("bcnops").find(c) != std::string_view::npos) {
      symbol = std::string(1, static_cast<char>(std::toupper(c)));
      atom.aromatic = true;
    } else {
      fail(ParseErrorKind::kBadToken, pos_,
           std::string("'") + c + "' is not an organic-subset atom; use brackets");
    }
    pos_ += symbol.size();
    const ElementInfo *info = find_element(symbol);
    atom.element = symbol;
    atom.atomic_number = info->atomic_number;
    add_atom(std::move(atom), start);
  }

  int read_uint(std::size_t max_digits, ParseErrorKind kind, const char *what) {
    std::size_t start = pos_;
    int value = 0;
    while (std::isdigit(static_cast<unsigned char>(peek()))) {
      if (pos_ - start >= max_digits) fail(kind, pos_, std::string(what) + " has too many digits");
      value = value * 10 + (peek() - '0');
      ++pos_;
    }
    return value;
  }

  void bracket_atom() {
    std::size_t start = pos_;
    ++pos_;
    Atom atom;
    atom.bracket = true;
    if (std::isdigit(static_cast<unsigned char>(peek())))
      atom.isotope = read_uint(3, ParseErrorKind::kBadToken, "isotope");

    // Element symbol.
    char c = peek();
    std::string symbol;
    if (c == '*') {
      symbol = "*";
      ++pos_;
    } else if (std::islower(static_cast<unsigned char>(c))) {
      static constexpr std::array<std::string_view, 9> kAromatic{"se", "as", "te", "b", "c",
                                                                 "n",  "o",  "p",  "s"};
      for (auto sym: kAromatic) {
        if (full_.substr(pos_, sym.size()) == sym && pos_ + sym.size() <= end_) {
          symbol = std::string(sym);
          symbol[0] = static_cast<char>(std::toupper(symbol[0]));
          atom.aromatic = true;
          pos_ += sym.size();
          break;
        }
      }
      if (symbol.empty()) fail(ParseErrorKind::kUnknownElement, pos_, "unknown aromatic symbol");
    } else if (std::isupper(static_cast<unsigned char>(c))) {
      char next = peek(1);
      if (std::islower(static_cast<unsigned char>(next)) && find_element(std::string{c, next})) {
        symbol = std::string{c, next};
      } else if (find_element(std::string(1, c))) {
        symbol = std::string(1, c);
      } else {
        std::string shown(1, c);
        if (std::islower(static_cast<unsigned char>(next))) shown += next;
        fail(ParseErrorKind::kUnknownElement, pos_, "unknown element '" + shown + "'");
      }
      pos_ += symbol.size();
    } else {
      fail(c == '\0' ? ParseErrorKind::kBadToken : ParseErrorKind::kUnknownElement, pos_,
           "bracket atom without an element symbol");
    }
    const ElementInfo *info = find_element(symbol);
    atom.element = symbol;
    atom.atomic_number = info->atomic_number;

    // Chirality: @, @@, or @TH1/@AL2/@SP3/@TB12/@OH30 forms.
    if (peek() == '@') {
      atom.has_stereo = true;
      ++pos_;
      if (peek() == '@') {
        ++pos_;
      } else {
        static constexpr std::array<std::string_view, 5> kClasses{"TH", "AL", "SP", "TB", "OH"};
        for (auto cls: kClasses) {
          if (pos_ + 2 <= end_ && full_.substr(pos_, 2) == cls) {
            pos_ += 2;
            if (!std::isdigit(static_cast<unsigned char>(peek())))
              fail(ParseErrorKind::kBadToken, pos_, "chirality class needs a number");
            read_uint(2, ParseErrorKind::kBadToken, "chirality");
            break;
          }
        }
      }
    }

    if (peek() == 'H') {
      ++pos_;
      atom.explicit_h = std::isdigit(static_cast<unsigned char>(peek())) ? peek() - '0' : 1;
      if (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    }

    if (peek() == '+' || peek() == '-') {
      std::size_t charge_start = pos_;
      char sign = peek();
      int magnitude = 1;
      ++pos_;
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        magnitude = read_uint(2, ParseErrorKind::kBadCharge, "charge");
      } else {
        while (peek() == sign) {
          ++magnitude;
          ++pos_;
        }
      }
      if (peek() == '+' || peek() == '-')
        fail(ParseErrorKind::kBadCharge, pos_, "malformed charge");
      if (magnitude > 15) fail(ParseErrorKind::kBadCharge, charge_start, "charge magnitude above 15");
      atom.formal_charge = sign == '+' ? magnitude : -magnitude;
    }

    if (peek() == ':') {
      ++pos_;
      if (!std::isdigit(static_cast<unsigned char>(peek())))
        fail(ParseErrorKind::kBadToken, pos_, "atom class needs a number");
      read_uint(4, ParseErrorKind::kBadToken, "atom class");
    }

    if (peek() != ']') {
      if (pos_ >= end_) fail(ParseErrorKind::kBadToken, start, "unterminated bracket atom");
      fail(ParseErrorKind::kBadToken, pos_,
           std::string("unexpected '") + printable(peek()) + "' in bracket atom");
    }
    ++pos_;
    add_atom(std::move(atom), start);
  }

  std::string_view full_;
  std::size_t pos_;
  std::size_t end_;
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::size_t> positions_;
  int prev_ = -1;
  std::optional<PendingBond> pending_;
  std::vector<std::pair<int, std::size_t>> branches_;
  std::map<int, RingOpen> rings_;
};

}  // namespace

Molecule parse_smiles(std::string_view text) {
  std::size_t begin = 0, end = text.size();
  while (begin < end && is_space(text[begin])) ++begin;
  while (end > begin && is_space(text[end - 1])) --end;
  if (begin == end) throw ParseError(ParseErrorKind::kEmptyInput, text.size(), "empty SMILES");
  return SmilesParser(text, begin, end).parse();
}

ParseOutcome try_parse_smiles(std::string_view text) {
  try {
    return {parse_smiles(text), std::nullopt};
  } catch (const ParseError &e) {
    return {std::nullopt, e};
  }
}

namespace {

std::string atom_token(const Atom &a) {
  std::string symbol = a.element;
  if (a.aromatic) symbol[0] = static_cast<char>(std::tolower(symbol[0]));
  if (!a.bracket) return symbol;
  std::string out = "[";
  if (a.isotope > 0) out += std::to_string(a.isotope);
  out += symbol;
  if (a.explicit_h == 1) out += "H";
  else if (a.explicit_h > 1) out += "H" + std::to_string(a.explicit_h);
  if (a.formal_charge > 0) out += "+" + std::to_string(a.formal_charge);
  else if (a.formal_charge < 0) out += "-" + std::to_string(-a.formal_charge);
  out += "]";
  return out;
}

std::string bond_token(const Molecule &mol, const Bond &b) {
  bool both_aromatic = mol.atoms()[b.a].aromatic && mol.atoms()[b.b].aromatic;
  switch (b.order) {
  case BondOrder::kSingle: return both_aromatic ? "-" : "";
  case BondOrder::kDouble: return "=";
  case BondOrder::kTriple: return "#";
  case BondOrder::kAromatic: return "";
  }
  return "";
}

std::string ring_label(int n) {
  return n < 10 ? std::string(1, static_cast<char>('0' + n)) : "%" + std::to_string(n);
}

}  // namespace

WrittenSmiles write_smiles(const Molecule &mol, int root, std::uint64_t shuffle_seed) {
  const int n = static_cast<int>(mol.atom_count());
  WrittenSmiles out;
  if (n == 0) return out;
  if (root < 0 || root >= n) root = 0;

  std::vector<std::vector<Neighbor>> adj(n);
  std::mt19937_64 rng(shuffle_seed);
  for (int i = 0; i < n; ++i) {
    adj[i] = mol.neighbors(i);
    std::sort(adj[i].begin(), adj[i].end(), [](const Neighbor &x, const Neighbor &y) { return x.atom < y.atom; });
    if (shuffle_seed != 0) std::shuffle(adj[i].begin(), adj[i].end(), rng);
  }

  // Pass 1: DFS spanning forest; non-tree bonds become ring closures.
  std::vector<int> preorder_index(n, -1);
  std::vector<std::vector<int>> children(n);  // bond indices to tree children, visit order
  std::vector<bool> tree_bond(mol.bond_count(), false);
  std::vector<int> roots;
  std::vector<int> comp_order{root};
  for (int i = 0; i < n; ++i)
    if (i != root) comp_order.push_back(i);
  int counter = 0;
  for (int start: comp_order) {
    if (preorder_index[start] >= 0) continue;
    roots.push_back(start);
    std::vector<std::pair<int, std::size_t>> stack{{start, 0}};
    preorder_index[start] = counter++;
    while (!stack.empty()) {
      auto &[x, next] = stack.back();
      if (next < adj[x].size()) {
        Neighbor nb = adj[x][next++];
        if (preorder_index[nb.atom] < 0) {
          preorder_index[nb.atom] = counter++;
          tree_bond[nb.bond] = true;
          children[x].push_back(nb.bond);
          stack.emplace_back(nb.atom, 0);
        }
      } else {
        stack.pop_back();
      }
    }
  }

  // Ring closures per atom, ordered by the partner's preorder position.
  std::vector<std::vector<int>> closures(n);
  for (std::size_t i = 0; i < mol.bond_count(); ++i) {
    if (tree_bond[i]) continue;
    const Bond &b = mol.bonds()[i];
    closures[b.a].push_back(static_cast<int>(i));
    closures[b.b].push_back(static_cast<int>(i));
  }
  for (int i = 0; i < n; ++i) {
    std::sort(closures[i].begin(), closures[i].end(), [&](int x, int y) {
      return preorder_index[mol.bonds()[x].other(i)] < preorder_index[mol.bonds()[y].other(i)];
    });
  }

  // Pass 2: emit.
  std::vector<int> ring_digit(mol.bond_count(), 0);
  std::vector<bool> digit_used(100, false);
  std::string &s = out.text;

  for (std::size_t r = 0; r < roots.size(); ++r) {
    if (r > 0) s += '.';
    struct Frame {
      int atom;
      std::size_t child;
    };
    std::vector<Frame> stack;
    auto emit_atom = [&](int x) {
      out.order.push_back(x);
      s += atom_token(mol.atoms()[x]);
      for (int bi: closures[x]) {
        int other = mol.bonds()[bi].other(x);
        if (preorder_index[other] < preorder_index[x]) {
          s += ring_label(ring_digit[bi]);
          digit_used[ring_digit[bi]] = false;
        }
      }
      for (int bi: closures[x]) {
        int other = mol.bonds()[bi].other(x);
        if (preorder_index[other] > preorder_index[x]) {
          int d = 1;
          while (d < 100 && digit_used[d]) ++d;
          if (d == 100) throw std::runtime_error("more than 99 open ring bonds");
          digit_used[d] = true;
          ring_digit[bi] = d;
          s += bond_token(mol, mol.bonds()[bi]);
          s += ring_label(d);
        }
      }
    };
    emit_atom(roots[r]);
    stack.push_back({roots[r], 0});
    while (!stack.empty()) {
      Frame &f = stack.back();
      const auto &ch = children[f.atom];
      if (f.child > 0) {
        // returning from child f.child - 1
        if (f.child < ch.size()) s += ')';
      }
      if (f.child >= ch.size()) {
        stack.pop_back();
        continue;
      }
      int bi = ch[f.child];
      bool last = f.child + 1 == ch.size();
      ++f.child;
      if (!last) s += '(';
      s += bond_token(mol, mol.bonds()[bi]);
      int next = mol.bonds()[bi].other(f.atom);
      emit_atom(next);
      stack.push_back({next, 0});
    }
  }
  return out;
}

}  // namespace toxbench::chem
