package com.acme.service;

import static org.junit.jupiter.api.Assertions.assertEquals;
import static org.mockito.Mockito.mock;
import static org.mockito.Mockito.verify;
import static org.mockito.Mockito.when;

import org.junit.jupiter.api.BeforeEach;
import org.junit.jupiter.api.Test;

class MockitoServiceTest {
    private Repository repo;
    private Service service;

    @BeforeEach
    void setUp() {
        repo = mock(Repository.class);
        service = new Service(repo);
    }

    @Test
    void readsThroughRepository() {
        when(repo.find(7)).thenReturn("seven");
        assertEquals("seven", service.describe(7));
        verify(repo).find(7);
    }
}
