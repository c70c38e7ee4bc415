package com.acme.calc;

public class Node {
    private final char op;
    private final double value;
    private final Node left;
    private final Node right;

    public Node(char op, Node left, Node right) {
        this.op = op;
        this.value = 0;
        this.left = left;
        this.right = right;
    }

    private Node(double value) {
        this.op = 0;
        this.value = value;
        this.left = null;
        this.right = null;
    }

    public static Node leaf(double value) {
        return new Node(value);
    }

    public char getOp() {
        return op;
    }

    public double getValue() {
        return value;
    }

    public Node getLeft() {
        return left;
    }

    public Node getRight() {
        return right;
    }

    public boolean isLeaf() {
        return left == null && right == null;
    }
}
