package com.acme.calc;

import static org.junit.jupiter.api.Assertions.assertFalse;
import static org.junit.jupiter.api.Assertions.assertTrue;

import org.junit.jupiter.api.Nested;
import org.junit.jupiter.api.Test;

class NestedClassTest {
    @Nested
    class Leaves {
        @Test
        void leafIsLeaf() {
            assertTrue(Node.leaf(1).isLeaf());
        }
    }

    @Nested
    class Inner {
        @Test
        void innerIsNotLeaf() {
            assertFalse(new Node('+', Node.leaf(1), Node.leaf(2)).isLeaf());
        }
    }
}
