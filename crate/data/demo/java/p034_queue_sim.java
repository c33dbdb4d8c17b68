import java.util.ArrayDeque;
import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        int n = sc.nextInt();
        int quantum = sc.nextInt();
        ArrayDeque<String> names = new ArrayDeque<>();
        ArrayDeque<Integer> times = new ArrayDeque<>();
        for (int i = 0; i < n; i++) {
            names.add(sc.next());
            times.add(sc.nextInt());
        }
        int elapsed = 0;
        StringBuilder sb = new StringBuilder();
        while (!names.isEmpty()) {
            String name = names.poll();
            int t = times.poll();
            if (t <= quantum) {
                elapsed += t;
                sb.append(name).append(' ').append(elapsed).append('\n');
            } else {
                elapsed += quantum;
                names.add(name);
                times.add(t - quantum);
            }
        }
        System.out.print(sb);
    }
}
