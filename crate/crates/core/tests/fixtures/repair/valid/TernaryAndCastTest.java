package com.acme.calc;

import static org.junit.jupiter.api.Assertions.assertEquals;

import org.junit.jupiter.api.Test;

class TernaryAndCastTest {
    @Test
    void castsDoubles() {
        double d = new Calculator().add(1.5, 2.0);
        int i = (int) d;
        assertEquals(3, i);
    }

    @Test
    void ternary() {
        int x = new Calculator().add(2, 2) > 3 ? 1 : 0;
        assertEquals(1, x);
    }
}
