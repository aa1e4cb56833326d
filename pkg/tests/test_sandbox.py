import threading

import pytest

from thinkanywhere.sandbox import (AssertTest, IoTest, ProfileNotConfigured,
                                   Sandbox, Status, TestCase, compare_io,
                                   load_test_suite, run_tests)

IO_3_6 = TestCase(IoTest(stdin="3", expected_stdout="6"))
DOUBLER = "print(int(input())*2)"


class TestCompareIo:
    def test_trailing_newline(self):
        assert compare_io("6\n", "6")

    def test_trailing_space(self):
        assert compare_io("a \nb", "a\nb")

    def test_mismatch(self):
        assert not compare_io("a\nb", "a\nc")

    def test_trailing_blank_lines(self):
        assert compare_io("a\nb\n\n\n", "a\nb")

    def test_interior_blank_lines_significant(self):
        assert not compare_io("a\n\nb", "a\nb")


class TestTestCase:
    def test_limit_validation(self):
        with pytest.raises(ValueError):
            TestCase(IoTest("", ""), time_limit_ms=0)
        with pytest.raises(ValueError):
            TestCase(IoTest("", ""), memory_limit_bytes=0)

    def test_suite_loading(self):
        suite = load_test_suite({
            "tests": [
                {"kind": "io", "stdin": "1", "expected_stdout": "2"},
                {"kind": "assert", "check_script": "assert True"},
            ],
            "time_limit_ms": 1000,
        })
        assert len(suite) == 2
        assert suite[0].time_limit_ms == 1000
        assert isinstance(suite[1].kind, AssertTest)


class TestRunTests:
    def test_io_pass(self, shared_sandbox):
        verdicts = shared_sandbox.run_tests(DOUBLER, [IO_3_6])
        assert [v.status for v in verdicts] == [Status.PASS]

    def test_wrong_output(self, shared_sandbox):
        verdicts = shared_sandbox.run_tests("print(7)", [IO_3_6])
        assert verdicts[0].status is Status.WRONG_OUTPUT

    def test_timeout(self, shared_sandbox):
        t = TestCase(IoTest("", ""), time_limit_ms=100)
        verdicts = shared_sandbox.run_tests("while True: pass", [t])
        assert verdicts[0].status is Status.TIMEOUT
        assert verdicts[0].wall_time_ms >= 100

    def test_memory_exceeded(self, shared_sandbox):
        t = TestCase(IoTest("", ""), memory_limit_bytes=64 * 1024 * 1024)
        verdicts = shared_sandbox.run_tests("x = [0] * (10 ** 9)", [t])
        assert verdicts[0].status is Status.MEMORY_EXCEEDED

    def test_compile_error_for_every_test(self, shared_sandbox):
        verdicts = shared_sandbox.run_tests("def f(:", [IO_3_6, IO_3_6])
        assert [v.status for v in verdicts] == [Status.COMPILE_ERROR] * 2

    def test_runtime_error(self, shared_sandbox):
        verdicts = shared_sandbox.run_tests("1/0", [IO_3_6])
        assert verdicts[0].status is Status.RUNTIME_ERROR

    def test_assert_pass_and_fail(self, shared_sandbox):
        code = "def add(a, b):\n    return a + b"
        good = TestCase(AssertTest("assert add(1, 2) == 3"))
        bad = TestCase(AssertTest("assert add(1, 2) == 4"))
        verdicts = shared_sandbox.run_tests(code, [good, bad])
        assert [v.status for v in verdicts] == \
            [Status.PASS, Status.RUNTIME_ERROR]

    def test_verdicts_in_order(self, shared_sandbox):
        tests = [TestCase(IoTest(str(i), str(2 * i))) for i in range(4)]
        tests[2] = TestCase(IoTest("5", "999"))
        verdicts = shared_sandbox.run_tests(DOUBLER, tests)
        assert [v.status for v in verdicts] == [
            Status.PASS, Status.PASS, Status.WRONG_OUTPUT, Status.PASS]

    def test_empty_tests_rejected(self, shared_sandbox):
        with pytest.raises(ValueError):
            shared_sandbox.run_tests(DOUBLER, [])

    def test_unknown_profile(self, shared_sandbox):
        with pytest.raises(ProfileNotConfigured):
            shared_sandbox.run_tests(DOUBLER, [IO_3_6], "cobol")

    def test_module_level_helper(self):
        assert run_tests(DOUBLER, [IO_3_6])[0].status is Status.PASS


class TestIsolation:
    def test_fresh_working_directory(self, shared_sandbox):
        writer = "open('marker.txt', 'w').write('x')\nprint('ok')"
        reader = ("import os\n"
                  "print('found' if os.path.exists('marker.txt') else 'clean')")
        v1 = shared_sandbox.run_tests(writer, [TestCase(IoTest("", "ok"))])
        v2 = shared_sandbox.run_tests(reader, [TestCase(IoTest("", "clean"))])
        assert v1[0].status is Status.PASS
        assert v2[0].status is Status.PASS

    def test_deterministic_verdicts(self, shared_sandbox):
        t = TestCase(IoTest("3", "6"))
        first = shared_sandbox.run_tests(DOUBLER, [t])[0].status
        for _ in range(3):
            assert shared_sandbox.run_tests(DOUBLER, [t])[0].status is first

    def test_limit_monotonicity(self, shared_sandbox):
        code = "x = list(range(10000))\nprint(len(x))"
        tight = TestCase(IoTest("", "10000"), time_limit_ms=5000,
                         memory_limit_bytes=128 * 1024 * 1024)
        loose = TestCase(IoTest("", "10000"), time_limit_ms=10000,
                         memory_limit_bytes=256 * 1024 * 1024)
        assert shared_sandbox.run_tests(code, [tight])[0].status is Status.PASS
        assert shared_sandbox.run_tests(code, [loose])[0].status is Status.PASS


class TestConcurrency:
    def test_parallel_callers(self, shared_sandbox):
        results = {}

        def worker(i):
            results[i] = shared_sandbox.run_tests(
                DOUBLER, [TestCase(IoTest(str(i), str(2 * i)))])

        threads = [threading.Thread(target=worker, args=(i,))
                   for i in range(6)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert all(results[i][0].status is Status.PASS for i in range(6))

    def test_pool_bound_observable(self):
        sb = Sandbox(max_workers=2)
        assert sb.workers_free == 2
        sb.shutdown()
