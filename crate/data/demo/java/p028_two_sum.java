import java.util.HashSet;
import java.util.Scanner;
import java.util.Set;

public class Main {
    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        int n = sc.nextInt();
        long target = sc.nextLong();
        Set<Long> seen = new HashSet<>();
        boolean found = false;
        for (int i = 0; i < n; i++) {
            long x = sc.nextLong();
            if (seen.contains(target - x)) {
                found = true;
            }
            seen.add(x);
        }
        System.out.println(found ? "YES" : "NO");
    }
}
