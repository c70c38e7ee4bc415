package com.acme.util;

import static org.junit.jupiter.api.Assertions.assertEquals;

import java.util.Comparator;
import org.junit.jupiter.api.Test;

class AnonymousClassTest {
    @Test
    void comparatorReversesOrder() {
        Comparator<Integer> reverse = new Comparator<Integer>() {
            @Override
            public int compare(Integer a, Integer b) {
                return b.compareTo(a);
            }
        };
        assertEquals(1, reverse.compare(1, 2));
    }

    @Test
    void runnableRuns() {
        int[] hits = {0};
        Runnable r = new Runnable() {
            public void run() {
                hits[0]++;
            }
        };
        r.run();
        assertEquals(1, hits[0]);
    }
}
