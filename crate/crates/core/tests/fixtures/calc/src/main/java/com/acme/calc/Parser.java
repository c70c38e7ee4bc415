package com.acme.calc;

import java.util.ArrayList;
import java.util.List;

/** Splits and parses "a op b" expressions. */
public class Parser {
    private final char separator;

    public Parser() {
        this(' ');
    }

    public Parser(char separator) {
        this.separator = separator;
    }

    public char getSeparator() {
        return separator;
    }

    public List<String> tokenize(String input) {
        List<String> out = new ArrayList<>();
        StringBuilder cur = new StringBuilder();
        for (char c : input.toCharArray()) {
            if (c == separator) {
                if (cur.length() > 0) {
                    out.add(cur.toString());
                    cur.setLength(0);
                }
            } else {
                cur.append(c);
            }
        }
        if (cur.length() > 0) {
            out.add(cur.toString());
        }
        return out;
    }

    public Node parse(String input) {
        List<String> tokens = tokenize(input);
        if (tokens.size() == 1) {
            return Node.leaf(Double.parseDouble(tokens.get(0)));
        }
        if (tokens.size() != 3) {
            throw new IllegalArgumentException("expected: a op b");
        }
        Node left = Node.leaf(Double.parseDouble(tokens.get(0)));
        Node right = Node.leaf(Double.parseDouble(tokens.get(2)));
        return new Node(tokens.get(1).charAt(0), left, right);
    }
}
