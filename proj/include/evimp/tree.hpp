#pragma once

// Bracketed constituency trees: parsing, token spans, sibling lookup, simple
// head rules, and node-to-node path strings for the fill/no-fill features.

#include "evimp/common.hpp"

namespace evimp::tree {

struct Node {
    std::string label;
    int parent = -1;
    std::vector<int> children;
    int token = -1;       // leaf token index, -1 for internal nodes
    int token_begin = 0;  // [begin, end) token span
    int token_end = 0;

    bool is_preterminal() const { return token >= 0; }
};

struct Tree {
    std::vector<Node> nodes;
    int root = -1;
    int n_tokens = 0;

    const Node& at(int i) const { return nodes[static_cast<size_t>(i)]; }

    // Preterminal node covering a token index, -1 if out of range.
    int preterminal_of(int token) const {
        for (size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].token == token) return static_cast<int>(i);
        return -1;
    }

    int right_sibling(int id) const {
        const int parent = at(id).parent;
        if (parent < 0) return -1;
        const auto& ch = at(parent).children;
        for (size_t i = 0; i + 1 < ch.size(); ++i)
            if (ch[i] == id) return ch[i + 1];
        return -1;
    }

    int left_sibling(int id) const {
        const int parent = at(id).parent;
        if (parent < 0) return -1;
        const auto& ch = at(parent).children;
        for (size_t i = 1; i < ch.size(); ++i)
            if (ch[i] == id) return ch[i - 1];
        return -1;
    }

    // Nearest sibling subtree to the right (left), climbing while the node is
    // the last (first) child. This finds the PP in "(NP (NP the sale) (PP of
    // the unit))" when asked for the right sibling of "sale".
    int attached_right_sibling(int id) const {
        int cur = id;
        while (cur >= 0) {
            const int sib = right_sibling(cur);
            if (sib >= 0) return sib;
            cur = at(cur).parent;
        }
        return -1;
    }

    int attached_left_sibling(int id) const {
        int cur = id;
        while (cur >= 0) {
            const int sib = left_sibling(cur);
            if (sib >= 0) return sib;
            cur = at(cur).parent;
        }
        return -1;
    }

    std::vector<int> ancestors(int id) const {  // id itself first, root last
        std::vector<int> path;
        for (int cur = id; cur >= 0; cur = at(cur).parent) path.push_back(cur);
        return path;
    }

    // Path string between two preterminals: labels up from `from` to the
    // common ancestor (joined with '^'), then down to `to` (joined with '!').
    std::string path_between(int from, int to) const {
        const std::vector<int> up = ancestors(from);
        const std::vector<int> down = ancestors(to);
        int common = -1;
        size_t up_len = 0;
        for (size_t i = 0; i < up.size() && common < 0; ++i)
            for (size_t j = 0; j < down.size(); ++j)
                if (up[i] == down[j]) {
                    common = up[i];
                    up_len = i;
                    break;
                }
        if (common < 0) return "";
        std::string path;
        for (size_t i = 0; i <= up_len; ++i) {
            if (i) path += "^";
            path += at(up[static_cast<int>(i)]).label;
        }
        std::vector<int> down_part;
        for (int cur = to; cur != common; cur = at(cur).parent) down_part.push_back(cur);
        for (auto it = down_part.rbegin(); it != down_part.rend(); ++it)
            path += "!" + at(*it).label;
        return path;
    }

    // Head token of a constituent under simple category rules: NP rightmost
    // N*-ish preterminal, VP leftmost V*, PP first IN/TO, otherwise the
    // rightmost child's head.
    int head_token(int id) const {
        const Node& n = at(id);
        if (n.is_preterminal()) return n.token;
        if (n.children.empty()) return -1;
        const std::string& label = n.label;
        auto head_of_matching = [&](bool rightmost, auto&& pred) -> int {
            if (rightmost) {
                for (auto it = n.children.rbegin(); it != n.children.rend(); ++it)
                    if (pred(at(*it).label)) return head_token(*it);
            } else {
                for (int c : n.children)
                    if (pred(at(c).label)) return head_token(c);
            }
            return -1;
        };
        int h = -1;
        if (starts_with(label, "NP") || starts_with(label, "NX") || starts_with(label, "WHNP"))
            h = head_of_matching(true, [](const std::string& l) {
                return !l.empty() && (l[0] == 'N' || starts_with(l, "PRP") || l == "CD");
            });
        else if (starts_with(label, "VP") || label == "S" || starts_with(label, "SINV"))
            h = head_of_matching(false, [](const std::string& l) {
                return !l.empty() && (l[0] == 'V' || starts_with(l, "MD") || starts_with(l, "VP"));
            });
        else if (starts_with(label, "PP"))
            h = head_of_matching(false,
                                 [](const std::string& l) { return l == "IN" || l == "TO"; });
        if (h >= 0) return h;
        return head_token(n.children.back());
    }

    // All preterminal node ids in token order.
    std::vector<int> preterminals() const {
        std::vector<int> out(static_cast<size_t>(n_tokens), -1);
        for (size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].token >= 0) out[static_cast<size_t>(nodes[i].token)] = static_cast<int>(i);
        return out;
    }
};

// Parse "(S (NP (DT the) (NN sale)) ...)". Leaf words may contain any
// non-space, non-paren characters; -LRB-/-RRB- style escapes pass through.
inline Tree parse_tree(const std::string& text) {
    Tree tree;
    std::vector<int> stack;
    size_t i = 0;
    const size_t n = text.size();
    auto skip_ws = [&] {
        while (i < n && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n')) ++i;
    };
    auto read_atom = [&] {
        const size_t start = i;
        while (i < n && text[i] != ' ' && text[i] != '\t' && text[i] != '\n' && text[i] != '(' &&
               text[i] != ')')
            ++i;
        return text.substr(start, i - start);
    };

    skip_ws();
    while (i < n) {
        if (text[i] == '(') {
            ++i;
            skip_ws();
            const std::string label = read_atom();
            if (label.empty()) throw FormatError("tree parse: node without a label");
            Node node;
            node.label = label;
            node.parent = stack.empty() ? -1 : stack.back();
            const int id = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back(node);
            if (!stack.empty())
                tree.nodes[static_cast<size_t>(stack.back())].children.push_back(id);
            else if (tree.root < 0)
                tree.root = id;
            else
                throw FormatError("tree parse: multiple roots");
            stack.push_back(id);
        } else if (text[i] == ')') {
            if (stack.empty()) throw FormatError("tree parse: unbalanced ')'");
            stack.pop_back();
            ++i;
        } else {
            if (stack.empty()) throw FormatError("tree parse: word outside any node");
            const std::string word = read_atom();
            if (word.empty()) throw FormatError("tree parse: empty word");
            Node& parent = tree.nodes[static_cast<size_t>(stack.back())];
            if (parent.token >= 0 || !parent.children.empty())
                throw FormatError("tree parse: preterminal '" + parent.label +
                                  "' has multiple children");
            parent.token = tree.n_tokens++;
        }
        skip_ws();
    }
    if (!stack.empty()) throw FormatError("tree parse: unbalanced '('");
    if (tree.root < 0) throw FormatError("tree parse: empty tree");

    // Token spans bottom-up (nodes were created in prefix order, so a reverse
    // sweep sees children before parents).
    for (auto it = tree.nodes.rbegin(); it != tree.nodes.rend(); ++it) {
        if (it->token >= 0) {
            it->token_begin = it->token;
            it->token_end = it->token + 1;
        } else {
            if (it->children.empty())
                throw FormatError("tree parse: internal node '" + it->label + "' has no children");
            it->token_begin = tree.nodes[static_cast<size_t>(it->children.front())].token_begin;
            it->token_end = tree.nodes[static_cast<size_t>(it->children.back())].token_end;
        }
    }
    return tree;
}

}  // namespace evimp::tree
